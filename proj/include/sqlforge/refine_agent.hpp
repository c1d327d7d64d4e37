#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sqlforge/error.hpp"
#include "sqlforge/executor.hpp"
#include "sqlforge/metrics.hpp"
#include "sqlforge/model_client.hpp"
#include "sqlforge/schema_catalog.hpp"
#include "sqlforge/sql_analysis.hpp"

namespace sqlforge {

struct CheckResult {
  ValidityReport validity;
  std::optional<ExecutionOutcome> outcome;  // absent when rejected statically

  bool passed() const noexcept { return validity.valid() && outcome && outcome->ok(); }
};

// Static validation, then execution for statically valid SQL. Execution
// errors become RuntimeError and timeouts become Timeout, with the engine
// message as detail. An empty result set passes.
CheckResult invalid_check(std::string_view sql, const DatabaseSchema& schema, const std::filesystem::path& db_path,
                          std::chrono::duration<double> timeout = kDefaultExecTimeout);

// Prompt for the debugger role: the generation prompt followed by the failed
// SQL, the error and an instruction to answer with one corrected statement.
std::string build_debug_prompt(std::string_view question, const std::vector<TableSchema>& schema_tables,
                               std::string_view failed_sql, const ValidityReport& validity);

enum class AttemptRole { Generator, Debugger };

std::string_view to_string(AttemptRole role) noexcept;

struct RefineAttempt {
  std::size_t iteration = 0;
  std::string sql;
  ValidityReport validity;
  std::optional<ExecutionOutcome> outcome;
  AttemptRole role = AttemptRole::Generator;
};

struct RefineResult {
  std::string final_sql;
  std::vector<RefineAttempt> attempts;
  bool succeeded = false;
  std::size_t iterations_used = 0;
};

struct RefineOptions {
  std::size_t max_iters = 3;
  double generator_temperature = 0.0;
  double debugger_temperature = 0.0;
  std::size_t max_tokens = 512;
  std::chrono::duration<double> timeout = kDefaultExecTimeout;
};

// Raised when an endpoint becomes unreachable mid-loop. Carries the attempts
// made so far.
class RefineInterrupted : public EndpointUnreachable {
 public:
  RefineInterrupted(const std::string& message, RefineResult partial)
      : EndpointUnreachable("EndpointUnreachable", message), partial_(std::move(partial)) {}

  const RefineResult& partial() const noexcept { return partial_; }

 private:
  RefineResult partial_;
};

// The generate / check / debug loop. Iteration 0 asks the generator with the
// rendered prompt; each later iteration asks the debugger about the previous
// failure. Stops at the first attempt that passes the invalid check or after
// `max_iters` attempts; final_sql is the last attempt's SQL either way. The
// prompt lists `schema_tables`, or every table of `db` when empty.
//
// Throws RefineInterrupted when an endpoint is unreachable, InvalidInput for
// max_iters == 0.
RefineResult parse_question(std::string_view question, const DatabaseSchema& db, ModelClient& generator,
                            ModelClient& debugger, const std::filesystem::path& db_path,
                            const RefineOptions& options = {}, const std::vector<TableSchema>& schema_tables = {});

struct CorpusRefineResult {
  std::map<std::string, std::string> predictions;  // sample_id -> final SQL
  std::map<std::string, RefineResult> results;
};

// Runs the loop for every sample. With `trace_dir`, writes
// `<trace_dir>/<sample_id>.json` per sample.
CorpusRefineResult refine_corpus(const std::vector<Sample>& samples, const std::filesystem::path& corpus_root,
                                 ModelClient& generator, ModelClient& debugger, std::size_t jobs,
                                 const RefineOptions& options = {},
                                 const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

void to_json(nlohmann::json& j, const RefineAttempt& a);
void to_json(nlohmann::json& j, const RefineResult& r);

}  // namespace sqlforge
