#include "sqlforge/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "sqlforge/error.hpp"
#include "sqlforge/jsonl.hpp"
#include "sqlforge/parallel.hpp"

namespace sqlforge {

namespace fs = std::filesystem;

namespace {

ExecutionOutcome execute_gold(const Sample& sample, const fs::path& db_path, const EvalOptions& options) {
  auto gold = execute(db_path, sample.gold_sql, options.timeout);
  if (!gold.ok()) {
    throw GoldExecutionFailed("gold SQL of " + sample.sample_id + " failed on " + db_path.string() + ": " +
                              (gold.kind == OutcomeKind::Timeout ? std::string("timeout") : gold.error_message));
  }
  return gold;
}

bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::string histogram_key(const EvalVerdict& v) {
  if (!v.outcome_kind) return std::string(kMissingPrediction);
  if (v.failure_class) return std::string(to_string(*v.failure_class));
  return std::string(kResultMismatch);
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

}  // namespace

MatchOptions match_options_for(std::string_view gold_sql, const EvalOptions& options) {
  MatchOptions m;
  m.set_semantics = options.set_semantics;
  try {
    m.order_sensitive = extract_references(gold_sql).has_order_by;
  } catch (const ParseError&) {
    m.order_sensitive = false;
  }
  return m;
}

bool execution_accuracy(std::string_view pred_sql, const Sample& sample, const fs::path& db_path,
                        const EvalOptions& options) {
  const auto gold = execute_gold(sample, db_path, options);
  const auto pred = execute(db_path, pred_sql, options.timeout);
  return results_match(pred, gold, match_options_for(sample.gold_sql, options));
}

bool test_suite_accuracy(std::string_view pred_sql, const Sample& sample, const std::vector<fs::path>& variant_db_paths,
                         const EvalOptions& options) {
  if (variant_db_paths.empty()) throw EmptyVariantSuite("empty variant suite for " + sample.sample_id);
  for (const auto& path : variant_db_paths) {
    if (!execution_accuracy(pred_sql, sample, path, options)) return false;
  }
  return true;
}

std::vector<fs::path> variant_suite(const fs::path& base_db, const fs::path& variant_root, std::string_view db_id) {
  std::vector<std::pair<unsigned long long, fs::path>> variants;
  const fs::path dir = variant_root / std::string(db_id);
  std::error_code ec;
  if (fs::is_directory(dir, ec)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto& p = entry.path();
      if (!entry.is_regular_file() || p.extension() != ".sqlite") continue;
      const auto stem = p.stem().string();
      if (!is_number(stem)) {
        spdlog::warn("ignoring variant file with non-numeric name: {}", p.string());
        continue;
      }
      variants.emplace_back(std::stoull(stem), p);
    }
  }
  std::sort(variants.begin(), variants.end());
  std::vector<fs::path> suite{base_db};
  for (auto& [k, p] : variants) suite.push_back(std::move(p));
  return suite;
}

EvalReport evaluate_corpus(const std::map<std::string, std::string>& predictions, const std::vector<Sample>& samples,
                           const fs::path& corpus_root, const std::optional<fs::path>& variant_root,
                           std::size_t parallelism, const EvalOptions& options) {
  std::set<std::string> known;
  for (const auto& s : samples) known.insert(s.sample_id);
  for (const auto& [id, sql] : predictions) {
    if (!known.contains(id)) throw UnknownSampleId("prediction for unknown sample " + id);
  }

  std::map<std::string, DatabaseSchema> schemas;
  for (const auto& s : samples) {
    if (schemas.contains(s.db_id)) continue;
    const auto path = corpus_database_path(corpus_root, s.db_id);
    if (!fs::is_regular_file(path)) throw CorpusLayoutError("database file not found: " + path.string());
    schemas.emplace(s.db_id, introspect_database(path, s.db_id));
  }

  std::vector<EvalVerdict> verdicts(samples.size());
  parallel_for(samples.size(), parallelism, [&](std::size_t i) {
    const Sample& sample = samples[i];
    EvalVerdict& v = verdicts[i];
    v.sample_id = sample.sample_id;
    const auto it = predictions.find(sample.sample_id);
    if (it == predictions.end()) {
      v.failure_class = ValidityStatus::SyntaxError;
      v.failure_detail = "missing prediction";
      if (variant_root) v.ts_match = false;
      return;
    }
    v.pred_sql = it->second;

    const auto& schema = schemas.at(sample.db_id);
    const auto match = match_options_for(sample.gold_sql, options);
    const auto gold = execute_gold(sample, schema.file_path, options);
    const auto pred = execute(schema.file_path, v.pred_sql, options.timeout);
    v.outcome_kind = pred.kind;
    v.ex_match = results_match(pred, gold, match);

    if (variant_root) {
      bool ts = v.ex_match;
      const auto suite = variant_suite(schema.file_path, *variant_root, sample.db_id);
      for (std::size_t k = 1; ts && k < suite.size(); ++k) {
        const auto variant_gold = execute_gold(sample, suite[k], options);
        ts = results_match(execute(suite[k], v.pred_sql, options.timeout), variant_gold, match);
      }
      v.ts_match = ts;
    }

    if (!v.ex_match) {
      const auto report = validate(v.pred_sql, schema);
      if (!report.valid()) {
        v.failure_class = report.status;
        v.failure_detail = report.detail;
      } else if (pred.kind == OutcomeKind::ExecError) {
        v.failure_class = ValidityStatus::RuntimeError;
        v.failure_detail = pred.error_message;
      } else if (pred.kind == OutcomeKind::Timeout) {
        v.failure_class = ValidityStatus::Timeout;
        v.failure_detail = "execution timed out";
      }
    }
  });

  std::sort(verdicts.begin(), verdicts.end(),
            [](const EvalVerdict& a, const EvalVerdict& b) { return a.sample_id < b.sample_id; });

  EvalReport report;
  report.n_samples = verdicts.size();
  std::size_t ex = 0;
  std::size_t ts = 0;
  for (const auto& v : verdicts) {
    if (v.ex_match) {
      ++ex;
    } else {
      ++report.error_histogram[histogram_key(v)];
    }
    if (v.ts_match.value_or(false)) ++ts;
  }
  const double n = static_cast<double>(report.n_samples);
  report.ex_accuracy = report.n_samples == 0 ? 0.0 : static_cast<double>(ex) / n;
  if (variant_root) report.ts_accuracy = report.n_samples == 0 ? 0.0 : static_cast<double>(ts) / n;
  report.verdicts = std::move(verdicts);
  return report;
}

std::vector<Sample> load_samples(const fs::path& path, const std::optional<fs::path>& corpus_root) {
  std::vector<Sample> samples;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const nlohmann::json& record, std::size_t line) {
    Sample s;
    s.sample_id = require_string(record, "sample_id", line);
    s.db_id = require_string(record, "db_id", line);
    s.question = require_string(record, "question", line);
    s.gold_sql = require_string(record, "gold_sql", line);
    if (!seen.insert(s.sample_id).second) {
      throw InvalidInput(path.string() + ":" + std::to_string(line) + ": duplicate sample_id " + s.sample_id);
    }
    samples.push_back(std::move(s));
  });

  if (corpus_root) {
    std::map<std::string, std::vector<TableSchema>> tables;
    for (auto& s : samples) {
      auto it = tables.find(s.db_id);
      if (it == tables.end()) {
        const auto db_path = corpus_database_path(*corpus_root, s.db_id);
        if (!fs::is_regular_file(db_path)) throw CorpusLayoutError("database file not found: " + db_path.string());
        it = tables.emplace(s.db_id, introspect_database(db_path, s.db_id).tables).first;
      }
      s.schema_tables = it->second;
    }
  }
  return samples;
}

std::map<std::string, std::string> load_predictions(const fs::path& path) {
  std::map<std::string, std::string> predictions;
  for_each_jsonl(path, [&](const nlohmann::json& record, std::size_t line) {
    auto id = require_string(record, "sample_id", line);
    auto sql = require_string(record, "sql", line);
    if (!predictions.emplace(id, std::move(sql)).second) {
      throw InvalidInput(path.string() + ":" + std::to_string(line) + ": duplicate prediction for " + id);
    }
  });
  return predictions;
}

void write_predictions(const fs::path& path, const std::map<std::string, std::string>& predictions) {
  std::vector<nlohmann::json> records;
  records.reserve(predictions.size());
  for (const auto& [id, sql] : predictions) records.push_back({{"sample_id", id}, {"sql", sql}});
  write_jsonl(path, records);
}

void to_json(nlohmann::json& j, const EvalVerdict& v) {
  j = nlohmann::json{{"sample_id", v.sample_id}, {"ex_match", v.ex_match}, {"pred_sql", v.pred_sql}};
  j["ts_match"] = v.ts_match ? nlohmann::json(*v.ts_match) : nlohmann::json(nullptr);
  j["failure_class"] =
      v.failure_class ? nlohmann::json(std::string(to_string(*v.failure_class))) : nlohmann::json(nullptr);
  j["failure_detail"] = v.failure_detail;
  j["outcome_kind"] =
      v.outcome_kind ? nlohmann::json(std::string(to_string(*v.outcome_kind))) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"ex_accuracy", r.ex_accuracy},
                     {"n_samples", r.n_samples},
                     {"error_histogram", r.error_histogram},
                     {"verdicts", r.verdicts}};
  j["ts_accuracy"] = r.ts_accuracy ? nlohmann::json(*r.ts_accuracy) : nlohmann::json(nullptr);
}

std::string format_summary_table(const EvalReport& report, std::string_view model_label) {
  const std::string ex = percent(report.ex_accuracy);
  const std::string ts = report.ts_accuracy ? percent(*report.ts_accuracy) : "-";
  const std::size_t w = std::max<std::size_t>(model_label.size(), 5);
  auto pad = [](std::string_view s, std::size_t width, bool right) {
    std::string out(s);
    if (out.size() < width) out.insert(right ? 0 : out.size(), width - out.size(), ' ');
    return out;
  };

  std::string out;
  out += pad("Model", w, false) + " | " + pad("EX", 5, true) + " | " + pad("TS", 5, true) + "\n";
  out += std::string(w, '-') + "-+-" + std::string(5, '-') + "-+-" + std::string(5, '-') + "\n";
  out += pad(model_label, w, false) + " | " + pad(ex, 5, true) + " | " + pad(ts, 5, true) + "\n";
  out += "samples: " + std::to_string(report.n_samples) + "\n";
  for (const auto& [key, count] : report.error_histogram) {
    out += "  " + key + ": " + std::to_string(count) + "\n";
  }
  return out;
}

}  // namespace sqlforge
