#include "sqlforge/refine_agent.hpp"

#include <fstream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "sqlforge/parallel.hpp"

namespace sqlforge {

namespace fs = std::filesystem;

namespace {

std::string format_seconds(std::chrono::duration<double> d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d.count());
  return buf;
}

std::string ask(ModelClient& client, std::string prompt, double temperature, std::size_t max_tokens) {
  GenerationRequest request;
  request.prompt = std::move(prompt);
  request.temperature = temperature;
  request.n = 1;
  request.max_tokens = max_tokens;
  return extract_sql(client.generate(request).completions.at(0));
}

nlohmann::json outcome_json(const ExecutionOutcome& o) {
  nlohmann::json j = {{"kind", to_string(o.kind)}};
  if (o.kind == OutcomeKind::Rows) {
    j["rows"] = o.rows;
  } else if (o.kind == OutcomeKind::ExecError) {
    j["error_message"] = o.error_message;
  }
  return j;
}

}  // namespace

CheckResult invalid_check(std::string_view sql, const DatabaseSchema& schema, const fs::path& db_path,
                          std::chrono::duration<double> timeout) {
  CheckResult result;
  result.validity = validate(sql, schema);
  if (!result.validity.valid()) return result;
  result.outcome = execute(db_path, sql, timeout);
  if (result.outcome->kind == OutcomeKind::ExecError) {
    result.validity = {ValidityStatus::RuntimeError, result.outcome->error_message};
  } else if (result.outcome->kind == OutcomeKind::Timeout) {
    result.validity = {ValidityStatus::Timeout, "execution exceeded " + format_seconds(timeout) + " s"};
  }
  return result;
}

std::string build_debug_prompt(std::string_view question, const std::vector<TableSchema>& schema_tables,
                               std::string_view failed_sql, const ValidityReport& validity) {
  std::string prompt = render_prompt(schema_tables, question);
  prompt += "-- The following SQL failed the validity check:\n";
  prompt += failed_sql;
  prompt += "\n-- Error (";
  prompt += to_string(validity.status);
  prompt += "): ";
  prompt += validity.detail;
  prompt += "\n-- Output a corrected single SQLite statement and nothing else.\n";
  return prompt;
}

std::string_view to_string(AttemptRole role) noexcept {
  return role == AttemptRole::Generator ? "Generator" : "Debugger";
}

RefineResult parse_question(std::string_view question, const DatabaseSchema& db, ModelClient& generator,
                            ModelClient& debugger, const fs::path& db_path, const RefineOptions& options,
                            const std::vector<TableSchema>& schema_tables) {
  if (options.max_iters == 0) throw InvalidInput("max_iters must be at least 1");
  const auto& tables = schema_tables.empty() ? db.tables : schema_tables;

  RefineResult result;
  for (std::size_t iteration = 0; iteration < options.max_iters; ++iteration) {
    RefineAttempt attempt;
    attempt.iteration = iteration;
    attempt.role = iteration == 0 ? AttemptRole::Generator : AttemptRole::Debugger;
    try {
      if (iteration == 0) {
        attempt.sql = ask(generator, render_prompt(tables, question), options.generator_temperature, options.max_tokens);
      } else {
        const auto& previous = result.attempts.back();
        attempt.sql = ask(debugger, build_debug_prompt(question, tables, previous.sql, previous.validity),
                          options.debugger_temperature, options.max_tokens);
      }
    } catch (const EndpointUnreachable& e) {
      throw RefineInterrupted(e.what(), std::move(result));
    }

    auto check = invalid_check(attempt.sql, db, db_path, options.timeout);
    attempt.validity = std::move(check.validity);
    attempt.outcome = std::move(check.outcome);
    const bool passed = attempt.validity.valid() && attempt.outcome && attempt.outcome->ok();

    result.final_sql = attempt.sql;
    result.attempts.push_back(std::move(attempt));
    result.iterations_used = iteration + 1;
    result.succeeded = passed;
    if (passed) break;
  }
  return result;
}

CorpusRefineResult refine_corpus(const std::vector<Sample>& samples, const fs::path& corpus_root,
                                 ModelClient& generator, ModelClient& debugger, std::size_t jobs,
                                 const RefineOptions& options, const std::optional<fs::path>& trace_dir) {
  std::map<std::string, DatabaseSchema> schemas;
  for (const auto& s : samples) {
    if (schemas.contains(s.db_id)) continue;
    const auto path = corpus_database_path(corpus_root, s.db_id);
    if (!fs::is_regular_file(path)) throw CorpusLayoutError("database file not found: " + path.string());
    schemas.emplace(s.db_id, introspect_database(path, s.db_id));
  }
  if (trace_dir) fs::create_directories(*trace_dir);

  std::vector<RefineResult> results(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto& db = schemas.at(s.db_id);
    results[i] = parse_question(s.question, db, generator, debugger, db.file_path, options, s.schema_tables);
    spdlog::debug("{}: {} after {} attempt(s)", s.sample_id, results[i].succeeded ? "valid" : "invalid",
                  results[i].iterations_used);
    if (trace_dir) {
      nlohmann::json trace = results[i];
      trace["sample_id"] = s.sample_id;
      std::ofstream out(*trace_dir / (s.sample_id + ".json"), std::ios::binary | std::ios::trunc);
      out << trace.dump(2) << '\n';
      if (!out) throw IoError("cannot write trace for " + s.sample_id);
    }
  });

  CorpusRefineResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.predictions[samples[i].sample_id] = results[i].final_sql;
    out.results.emplace(samples[i].sample_id, std::move(results[i]));
  }
  return out;
}

void to_json(nlohmann::json& j, const RefineAttempt& a) {
  j = nlohmann::json{{"iteration", a.iteration},
                     {"role", to_string(a.role)},
                     {"sql", a.sql},
                     {"validity", {{"status", to_string(a.validity.status)}, {"detail", a.validity.detail}}}};
  j["outcome"] = a.outcome ? outcome_json(*a.outcome) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const RefineResult& r) {
  j = nlohmann::json{{"final_sql", r.final_sql},
                     {"succeeded", r.succeeded},
                     {"iterations_used", r.iterations_used},
                     {"attempts", r.attempts}};
}

}  // namespace sqlforge
