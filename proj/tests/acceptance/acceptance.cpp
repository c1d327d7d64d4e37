// Acceptance run over the fixture corpus. Prints one PASS/FAIL line per
// criterion and exits non-zero when any criterion fails.

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include <json.hpp>

#include "fixture_corpus.hpp"
#include "reference_texts.hpp"
#include "sqlforge/augmentation.hpp"
#include "sqlforge/cli.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/executor.hpp"
#include "sqlforge/metrics.hpp"
#include "sqlforge/model_client.hpp"
#include "sqlforge/parallel.hpp"
#include "sqlforge/preference_miner.hpp"
#include "sqlforge/refine_agent.hpp"
#include "sqlforge/text.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sqlforge;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Cli {
  int code = 0;
  std::string out;
  std::string err;
};

Cli cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "sqlforge");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Context {
  fs::path dir;
  testing::FixtureCorpus corpus;
  std::vector<Sample> samples;
  std::vector<DatabaseSchema> schemas;

  const Sample& sample(const std::string& id) const {
    for (const auto& s : samples) {
      if (s.sample_id == id) return s;
    }
    throw std::out_of_range(id);
  }
  const DatabaseSchema& schema(const std::string& id) const {
    for (const auto& d : schemas) {
      if (d.db_id == id) return d;
    }
    throw std::out_of_range(id);
  }
};

// 1. Gold predictions score EX = TS = 1.0 through the eval command.
Verdict gold_self_evaluation(const Context& ctx) {
  const auto start = Clock::now();
  const auto r = cli_run({"--json", "eval", "--corpus", ctx.corpus.root.string(), "--samples",
                          ctx.corpus.samples_file.string(), "--preds", ctx.corpus.gold_preds_file.string(),
                          "--variants", ctx.corpus.variants_root.string()});
  const double elapsed = seconds_since(start);
  if (r.code != 0) return {false, "eval exited " + std::to_string(r.code) + ": " + r.err};
  const auto doc = json::parse(r.out);
  const double ex = doc.at("ex_accuracy").get<double>();
  const double ts = doc.at("ts_accuracy").get<double>();
  const auto n = doc.at("n_samples").get<std::size_t>();
  return {ex == 1.0 && ts == 1.0 && elapsed < 30.0 && n == ctx.samples.size(),
          "EX=" + fmt(ex, 3) + " TS=" + fmt(ts, 3) + " over " + std::to_string(n) + " samples in " + fmt(elapsed) +
              " s (limit 30 s)"};
}

// Rows fetched with the raw engine API and rendered to text. Integral reals
// print as integers, other reals with 10 significant digits.
std::optional<std::vector<std::string>> oracle_rows(const fs::path& path, const std::string& sql) {
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
    sqlite3_close(db);
    return std::nullopt;
  }
  sqlite3_stmt* stmt = nullptr;
  const char* tail = nullptr;
  std::optional<std::vector<std::string>> rows;
  if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, &tail) == SQLITE_OK && stmt != nullptr &&
      std::string_view(tail).find_first_not_of(" \t\n;") == std::string_view::npos) {
    rows.emplace();
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
      std::string row;
      for (int i = 0; i < sqlite3_column_count(stmt); ++i) {
        switch (sqlite3_column_type(stmt, i)) {
          case SQLITE_NULL: row += "N|"; break;
          case SQLITE_INTEGER: row += "I" + std::to_string(sqlite3_column_int64(stmt, i)) + "|"; break;
          case SQLITE_FLOAT: {
            const double v = sqlite3_column_double(stmt, i);
            char buf[64];
            if (v == static_cast<double>(static_cast<long long>(v))) {
              std::snprintf(buf, sizeof buf, "I%lld|", static_cast<long long>(v));
            } else {
              std::snprintf(buf, sizeof buf, "R%.10g|", v);
            }
            row += buf;
            break;
          }
          case SQLITE_TEXT:
            row += "T" + std::string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, i))) + "|";
            break;
          default:
            row += "B" + std::string(static_cast<const char*>(sqlite3_column_blob(stmt, i)),
                                     static_cast<std::size_t>(sqlite3_column_bytes(stmt, i))) + "|";
        }
      }
      rows->push_back(std::move(row));
    }
    if (rc != SQLITE_DONE) rows.reset();
  }
  sqlite3_finalize(stmt);
  sqlite3_close(db);
  return rows;
}

bool oracle_match(const fs::path& db, const std::string& pred, const std::string& gold, bool ordered) {
  auto p = oracle_rows(db, pred);
  auto g = oracle_rows(db, gold);
  if (!p) return false;
  if (!ordered) {
    std::sort(p->begin(), p->end());
    std::sort(g->begin(), g->end());
  }
  return *p == *g;
}

std::vector<std::pair<std::string, std::string>> generated_pairs(const Context& ctx) {
  static const std::vector<std::pair<std::string, std::string>> edits = {
      {" DESC", " ASC"},       {">", ">="},         {"count(*)", "count(DISTINCT 1)"}, {"<", "<="},
      {"LIMIT 1", "LIMIT 2"},  {"min(", "max("},   {"avg(", "sum("},                  {"NOT IN", "IN"},
      {"DISTINCT ", ""},       {"ASC", "DESC"},    {"= 'dog'", "= 'cat'"},            {"T1.", "T1."}};
  std::mt19937_64 rng(20240601);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& s : ctx.samples) {
    const std::string& gold = s.gold_sql;
    std::vector<std::string> preds = {gold, "SELECT * FROM (" + gold + ") LIMIT 1"};
    std::vector<std::string> mutated;
    for (const auto& [from, to] : edits) {
      const auto pos = gold.find(from);
      if (pos != std::string::npos && from != to) mutated.push_back(std::string(gold).replace(pos, from.size(), to));
    }
    if (!mutated.empty()) preds.push_back(mutated[rng() % mutated.size()]);
    std::vector<const Sample*> same_db;
    for (const auto& other : ctx.samples) {
      if (other.db_id == s.db_id && other.sample_id != s.sample_id) same_db.push_back(&other);
    }
    preds.push_back(same_db[rng() % same_db.size()]->gold_sql);
    if (preds.size() < 4) preds.push_back("SELECT * FROM (" + gold + ") ORDER BY 1 DESC");
    for (std::size_t i = 0; i < 4; ++i) pairs.emplace_back(preds[i], s.sample_id);
  }
  return pairs;
}

// 2. results_match against an independent comparator on 200 pairs.
Verdict ex_oracle_equivalence(const Context& ctx) {
  const auto pairs = generated_pairs(ctx);
  std::size_t agree = 0;
  std::size_t matches = 0;
  std::string first_disagreement;
  for (const auto& [pred, id] : pairs) {
    const auto& s = ctx.sample(id);
    const auto db = ctx.corpus.db_path(s.db_id);
    const auto options = match_options_for(s.gold_sql);
    const bool lib = results_match(execute(db, pred), execute(db, s.gold_sql), options);
    const bool oracle = oracle_match(db, pred, s.gold_sql, options.order_sensitive);
    if (lib == oracle) {
      ++agree;
    } else if (first_disagreement.empty()) {
      first_disagreement = "; first disagreement: " + id + ": " + pred;
    }
    matches += lib;
  }
  return {pairs.size() == 200 && agree == pairs.size(),
          std::to_string(agree) + "/" + std::to_string(pairs.size()) + " agree (" + std::to_string(matches) +
              " matching, " + std::to_string(pairs.size() - matches) + " differing)" + first_disagreement};
}

// 3. The chosen/rejected example, mined end to end with a mock model.
Verdict reference_pair_fidelity(const Context& ctx) {
  const auto& s = ctx.sample("soccer_2_000");
  const auto db = ctx.corpus.db_path("soccer_2");
  const auto gold = execute(db, std::string(testing::kSoccerChosen));
  const auto rejected = execute(db, std::string(testing::kSoccerRejected));
  const bool differ = gold.ok() && !results_match(rejected, gold);

  MockClient mock({{std::nullopt, {std::string(testing::kSoccerRejected)}}});
  MineOptions options;
  options.n_candidates = 1;
  const auto pairs = mine_pairs(s, mock, db, options);
  if (pairs.size() != 1) return {false, "expected 1 pair, got " + std::to_string(pairs.size())};
  const auto& p = pairs[0];
  const json j = p;
  const bool shape = j.contains("prompt") && j.contains("chosen") && j.contains("rejected");
  const bool prompt_ok = p.prompt == testing::normalize_typeset(testing::kSoccerPromptTypeset);
  const bool chosen_ok = p.chosen == testing::kSoccerChosen;
  const bool rejected_ok = p.rejected == testing::kSoccerRejected;
  return {differ && shape && prompt_ok && chosen_ok && rejected_ok,
          std::string("prompt ") + (prompt_ok ? "matches" : "differs") + ", chosen " +
              (chosen_ok ? "matches" : "differs") + ", rejected " + (rejected_ok ? "matches" : "differs") +
              ", rejected outcome " + std::string(to_string(rejected.kind)) + " (reason " +
              std::string(to_string(p.rejected_reason)) + ")"};
}

// PK/FK column names of the sample's tables, read with PRAGMAs.
std::set<std::string> pragma_keys(const fs::path& path, const std::vector<TableSchema>& tables) {
  sqlite3* db = nullptr;
  sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr);
  std::set<std::string> own;
  for (const auto& t : tables) own.insert(to_lower(t.name));
  std::set<std::string> keys;
  auto each = [&](const std::string& sql, const std::function<void(sqlite3_stmt*)>& fn) {
    sqlite3_stmt* stmt = nullptr;
    sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr);
    while (sqlite3_step(stmt) == SQLITE_ROW) fn(stmt);
    sqlite3_finalize(stmt);
  };
  auto text = [](sqlite3_stmt* stmt, int i) {
    const auto* p = sqlite3_column_text(stmt, i);
    return p != nullptr ? to_lower(reinterpret_cast<const char*>(p)) : std::string();
  };
  std::vector<std::string> all;
  each("SELECT name FROM sqlite_master WHERE type = 'table'", [&](sqlite3_stmt* st) { all.push_back(text(st, 0)); });
  for (const auto& t : all) {
    each("SELECT name FROM pragma_table_info('" + t + "') WHERE pk > 0", [&](sqlite3_stmt* st) {
      if (own.contains(t)) keys.insert(text(st, 0));
    });
    each("SELECT \"table\", \"from\", \"to\" FROM pragma_foreign_key_list('" + t + "')", [&](sqlite3_stmt* st) {
      if (own.contains(t)) keys.insert(text(st, 1));
      if (own.contains(text(st, 0))) keys.insert(text(st, 2));
    });
  }
  sqlite3_close(db);
  return keys;
}

// 4. Augmentation invariants over 1,000 seeds per mode.
Verdict augmentation_invariants(const Context& ctx) {
  const auto start = Clock::now();
  constexpr std::uint64_t kSeeds = 1000;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::string first;
  auto violation = [&](const std::string& what) {
    if (violations++ == 0) first = what;
  };

  struct Prepared {
    const Sample* sample;
    std::set<std::string> keys;
    std::size_t n_candidates;
  };
  std::vector<Prepared> prepared;
  for (const auto& s : ctx.samples) {
    prepared.push_back({&s, pragma_keys(ctx.corpus.db_path(s.db_id), s.schema_tables),
                        cross_db_candidates(s, ctx.schemas).size()});
  }

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    for (const auto& prep : prepared) {
      const Sample& s = *prep.sample;
      const auto& db = ctx.schema(s.db_id);
      const std::string where = s.sample_id + " seed " + std::to_string(seed);

      // Cross-DB
      const auto cross = cross_db_augment(s, ctx.schemas, seed);
      ++checked;
      if (prep.n_candidates == 0) {
        if (!std::holds_alternative<UnchangedProvenance>(cross.provenance)) violation(where + ": expected Unchanged");
      } else if (const auto* p = std::get_if<CrossDbProvenance>(&cross.provenance)) {
        const auto n = p->inserted_table_names.size();
        if (n < 1 || n > 3 || n > prep.n_candidates) violation(where + ": N=" + std::to_string(n));
        if (cross.schema_tables.size() != s.schema_tables.size() + n) violation(where + ": table count");
        std::vector<std::string> originals;
        for (const auto& t : cross.schema_tables) {
          const bool inserted = std::find(p->inserted_table_names.begin(), p->inserted_table_names.end(), t.name) !=
                                p->inserted_table_names.end();
          if (!inserted) {
            originals.push_back(t.name);
            continue;
          }
          const bool overlaps = std::any_of(t.columns.begin(), t.columns.end(),
                                            [&](const ColumnSchema& c) { return prep.keys.contains(to_lower(c.name)); });
          if (!overlaps) violation(where + ": " + t.name + " shares no key column");
        }
        for (const auto& source : p->source_db_ids) {
          if (source == s.db_id) violation(where + ": inserted table from own database");
        }
        std::vector<std::string> expected;
        for (const auto& t : s.schema_tables) expected.push_back(t.name);
        if (originals != expected) violation(where + ": original tables disturbed");
        if (!validate(s.gold_sql, DatabaseSchema{s.db_id, "", cross.schema_tables, {}}).valid()) {
          violation(where + ": gold invalid after cross-db");
        }
      } else {
        violation(where + ": expected CrossDB provenance");
      }

      // Inner-DB
      const auto inner = inner_db_augment(s, db, seed);
      ++checked;
      if (inner.schema_tables.size() > 6) violation(where + ": " + std::to_string(inner.schema_tables.size()) + " tables");
      for (const auto& t : inner.schema_tables) {
        if (t.columns.size() > 10) violation(where + ": " + t.name + " has " + std::to_string(t.columns.size()) + " columns");
        if (t.columns.empty()) violation(where + ": " + t.name + " has no columns");
      }
      if (!validate(s.gold_sql, DatabaseSchema{s.db_id, "", inner.schema_tables, {}}).valid()) {
        violation(where + ": gold invalid after inner-db");
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {violations == 0 && elapsed < 60.0,
          std::to_string(violations) + " violations in " + std::to_string(checked) + " augmentations (" +
              std::to_string(kSeeds) + " seeds x " + std::to_string(ctx.samples.size()) + " samples x 2 modes) in " +
              fmt(elapsed) + " s (limit 60 s)" + (first.empty() ? "" : "; first: " + first)};
}

std::string prompt_key(const Sample& s) { return "-- " + s.question + "\n"; }

// 5. Ten scripted generator failures, six repaired by the debugger.
Verdict reflection_loop_improvement(const Context& ctx) {
  struct Failure {
    std::string sample_id;
    std::string broken_sql;
    ValidityStatus expected;
    bool repaired;
  };
  const std::vector<Failure> failures = {
      {"concert_singer_000", "SELECT count(*) FROM singers", ValidityStatus::WrongTableName, true},
      {"singer_001", "SELECT Name FROM singer ORDER BY NetWorth ASC", ValidityStatus::WrongColumnName, true},
      {"soccer_2_000", std::string(testing::kSoccerRejected), ValidityStatus::WrongColumnName, true},
      {"transit_001", "SELECT free text FROM stops WHERE \"stop name\" = 'Central'", ValidityStatus::MissingQuotation, true},
      {"pets_1_001", "SELECT avg(weight), PetType FROM Pet GROUP BY PetType", ValidityStatus::WrongTableName, true},
      {"transit_002", "SELECT zone_id, max(km/h) FROM stops GROUP BY zone_id", ValidityStatus::MissingQuotation, true},
      {"flight_2_003", "SELECT AirportName FROM airport WHERE City = 'Aberdeen'", ValidityStatus::WrongTableName, false},
      {"world_1_003", "SELECT Name FROM city WHERE Populaton > 1000000", ValidityStatus::WrongColumnName, false},
      {"museum_visit_000", "SELECT count(*) FROM museums WHERE Open_Year > 2010", ValidityStatus::WrongTableName, false},
      {"transit_003", "SELECT agency_name FROM agencies WHERE home town = 'Springfield'", ValidityStatus::MissingQuotation, false},
  };

  std::map<std::string, const Failure*> failing;
  std::map<std::string, std::size_t> class_mix;
  for (const auto& f : failures) {
    failing[f.sample_id] = &f;
    const auto& s = ctx.sample(f.sample_id);
    const auto status = validate(f.broken_sql, ctx.schema(s.db_id)).status;
    if (status != f.expected) {
      return {false, f.sample_id + ": scripted failure classified " + std::string(to_string(status))};
    }
    ++class_mix[std::string(to_string(status))];
  }

  RefineOptions options;
  options.max_iters = 3;
  std::vector<MockEntry> gen_script;
  std::vector<MockEntry> dbg_script;
  std::map<std::string, std::string> baseline;
  for (const auto& s : ctx.samples) {
    const auto it = failing.find(s.sample_id);
    const std::string first = it == failing.end() ? s.gold_sql : it->second->broken_sql;
    gen_script.push_back({prompt_key(s), {first}});
    baseline[s.sample_id] = first;
    if (it != failing.end()) {
      if (it->second->repaired) {
        dbg_script.push_back({prompt_key(s), {s.gold_sql}});
      } else {
        dbg_script.push_back({prompt_key(s), std::vector<std::string>(options.max_iters - 1, first)});
      }
    }
  }
  MockClient generator(gen_script);
  MockClient debugger(dbg_script);

  const auto refined = refine_corpus(ctx.samples, ctx.corpus.root, generator, debugger, default_jobs(), options);
  const auto base_report = evaluate_corpus(baseline, ctx.samples, ctx.corpus.root, std::nullopt, default_jobs());
  const auto pipe_report =
      evaluate_corpus(refined.predictions, ctx.samples, ctx.corpus.root, std::nullopt, default_jobs());

  std::size_t base_hits = 0;
  std::size_t pipe_hits = 0;
  for (const auto& v : base_report.verdicts) base_hits += v.ex_match;
  for (const auto& v : pipe_report.verdicts) pipe_hits += v.ex_match;

  std::set<std::string> contacted;
  for (const auto& prompt : debugger.prompts()) {
    for (const auto& s : ctx.samples) {
      if (prompt.find(prompt_key(s)) != std::string::npos) contacted.insert(s.sample_id);
    }
  }
  std::set<std::string> expected;
  for (const auto& f : failures) expected.insert(f.sample_id);

  std::string mix;
  for (const auto& [k, n] : class_mix) mix += (mix.empty() ? "" : ", ") + k + " " + std::to_string(n);
  const std::size_t n = ctx.samples.size();
  return {base_hits + 10 == n && pipe_hits == base_hits + 6 && contacted == expected,
          "baseline EX " + std::to_string(base_hits) + "/" + std::to_string(n) + " -> pipeline EX " +
              std::to_string(pipe_hits) + "/" + std::to_string(n) + " (+" + std::to_string(pipe_hits - base_hits) +
              "); debugger contacted for " + std::to_string(contacted.size()) + " samples (" +
              (contacted == expected ? "exactly the failing ones" : "MISMATCH") + "); failures: " + mix};
}

// 6. The loop stops at max_iters on an always-failing model.
Verdict termination_and_budget(const Context& ctx) {
  const auto& s = ctx.sample("concert_singer_000");
  const auto& db = ctx.schema(s.db_id);
  std::string detail;
  bool pass = true;
  for (const std::size_t budget : {1u, 2u, 3u, 5u, 10u}) {
    MockClient generator({{std::nullopt, std::vector<std::string>(50, "SELECT nope FROM singer")}});
    MockClient debugger({{std::nullopt, std::vector<std::string>(50, "SELECT Name FROM nowhere")}});
    RefineOptions options;
    options.max_iters = budget;
    const auto r = parse_question(s.question, db, generator, debugger, ctx.corpus.db_path(s.db_id), options);
    const bool ok = !r.succeeded && r.attempts.size() == budget && r.iterations_used == budget &&
                    generator.calls() == 1 && debugger.calls() == budget - 1;
    pass = pass && ok;
    detail += (detail.empty() ? "" : ", ") + std::string("max_iters ") + std::to_string(budget) + ": " +
              std::to_string(r.attempts.size()) + " attempts" + (ok ? "" : " (WRONG)");
  }
  return {pass, detail + "; succeeded=false throughout"};
}

// 7. Byte-identical reruns and job-count invariance.
Verdict determinism(const Context& ctx) {
  const auto dir = ctx.dir / "determinism";
  fs::create_directories(dir);
  const std::string corpus = ctx.corpus.root.string();
  const std::string samples = ctx.corpus.samples_file.string();
  std::vector<std::string> problems;

  for (const std::string mode : {"cross-db", "inner-db"}) {
    for (const auto* run : {"a", "b"}) {
      const auto r = cli_run({"augment", "--mode", mode, "--corpus", corpus, "--samples", samples, "--seed", "7",
                              "--jobs", run == std::string("a") ? "1" : "8", "--out",
                              (dir / (mode + "_" + run + ".jsonl")).string()});
      if (r.code != 0) problems.push_back("augment " + mode + " exited " + std::to_string(r.code));
    }
    if (slurp(dir / (mode + "_a.jsonl")) != slurp(dir / (mode + "_b.jsonl"))) problems.push_back("augment " + mode);
  }

  std::vector<MockEntry> script;
  for (const auto& s : ctx.samples) {
    script.push_back({prompt_key(s), {s.gold_sql, s.gold_sql + " LIMIT 0", "SELECT 1", "SELECT * FROM nope"}});
  }
  write_mock_script(dir / "mock.jsonl", script);
  for (const auto* run : {"a", "b"}) {
    const auto r = cli_run({"mine", "--corpus", corpus, "--samples", samples, "--mock", (dir / "mock.jsonl").string(),
                            "--n-candidates", "4", "--jobs", run == std::string("a") ? "1" : "8", "--out",
                            (dir / (std::string("pairs_") + run + ".jsonl")).string()});
    if (r.code != 0) problems.push_back("mine exited " + std::to_string(r.code) + ": " + r.err);
  }
  if (slurp(dir / "pairs_a.jsonl") != slurp(dir / "pairs_b.jsonl")) problems.push_back("mine");

  std::map<std::string, std::string> preds;
  std::size_t i = 0;
  for (const auto& s : ctx.samples) preds[s.sample_id] = i++ % 4 == 0 ? s.gold_sql + " LIMIT 1" : s.gold_sql;
  write_predictions(dir / "preds.jsonl", preds);
  for (const auto* jobs : {"1", "8", "8"}) {
    const auto r = cli_run({"eval", "--corpus", corpus, "--samples", samples, "--preds", (dir / "preds.jsonl").string(),
                            "--variants", ctx.corpus.variants_root.string(), "--jobs", jobs, "--report",
                            (dir / (std::string("report_") + jobs + ".json")).string()});
    if (r.code != 0) problems.push_back("eval exited " + std::to_string(r.code));
    fs::rename(dir / (std::string("report_") + jobs + ".json"),
               dir / (std::string("report_") + jobs + "_" + std::to_string(i++) + ".json"));
  }
  std::set<std::string> reports;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename().string().starts_with("report_")) reports.insert(slurp(entry.path()));
  }
  if (reports.size() != 1) problems.push_back("eval reports differ across --jobs");

  std::string detail = "augment (2 modes), mine and eval (--jobs 1 vs 8) reruns ";
  if (problems.empty()) return {true, detail + "byte-identical"};
  for (const auto& p : problems) detail += "[" + p + "] ";
  return {false, detail + "differ"};
}

// 8. The concert_singer prompt matches the reference text box.
Verdict prompt_fidelity(const Context& ctx) {
  const auto prompt = render_prompt(ctx.schema("concert_singer").tables, "How many singers do we have?");
  const auto expected = testing::normalize_typeset(testing::kConcertSingerPromptTypeset);
  const bool has_line =
      prompt.find("\n-- Using valid SQLite, answer the following questions for the tables provided above.\n") !=
      std::string::npos;
  return {prompt == expected && has_line,
          std::string("rendered prompt ") + (prompt == expected ? "equals" : "differs from") +
              " the reference text; instruction line " + (has_line ? "present" : "missing")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  Context ctx;
  ctx.dir = testing::make_temp_dir("sqlforge-acceptance");
  ctx.corpus = testing::build_fixture_corpus(ctx.dir);
  ctx.samples = load_samples(ctx.corpus.samples_file, ctx.corpus.root);
  ctx.schemas = load_corpus(ctx.corpus.root);

  const std::vector<std::pair<std::string, std::function<Verdict(const Context&)>>> criteria = {
      {"gold self-evaluation", gold_self_evaluation},
      {"EX oracle equivalence", ex_oracle_equivalence},
      {"chosen/rejected example fidelity", reference_pair_fidelity},
      {"augmentation invariants", augmentation_invariants},
      {"reflection-loop improvement", reflection_loop_improvement},
      {"termination and budget", termination_and_budget},
      {"determinism", determinism},
      {"prompt fidelity", prompt_fidelity},
  };

  std::size_t passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    passed += v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  fs::remove_all(ctx.dir);
  return passed == criteria.size() ? 0 : 1;
}
