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

#include "sqlforge/executor.hpp"
#include "sqlforge/schema_catalog.hpp"
#include "sqlforge/sql_analysis.hpp"

namespace sqlforge {

struct Sample {
  std::string sample_id;
  std::string db_id;
  std::string question;
  std::string gold_sql;
  std::vector<TableSchema> schema_tables;  // the prompt's schema list
};

struct EvalVerdict {
  std::string sample_id;
  bool ex_match = false;
  std::optional<bool> ts_match;  // absent without a variant root
  std::string pred_sql;
  std::optional<ValidityStatus> failure_class;
  std::string failure_detail;
  std::optional<OutcomeKind> outcome_kind;  // absent for missing predictions
};

// Histogram keys that are not validity statuses.
inline constexpr std::string_view kMissingPrediction = "MissingPrediction";
inline constexpr std::string_view kResultMismatch = "ResultMismatch";

struct EvalReport {
  double ex_accuracy = 0.0;
  std::optional<double> ts_accuracy;
  std::size_t n_samples = 0;
  std::map<std::string, std::size_t> error_histogram;
  std::vector<EvalVerdict> verdicts;  // sorted by sample_id
};

struct EvalOptions {
  std::chrono::duration<double> timeout = kDefaultExecTimeout;
  bool set_semantics = false;
};

// Order sensitivity follows the gold query's top-level ORDER BY.
MatchOptions match_options_for(std::string_view gold_sql, const EvalOptions& options = {});

// EX on one database.
//
// Throws GoldExecutionFailed when the gold query does not return rows.
bool execution_accuracy(std::string_view pred_sql, const Sample& sample, const std::filesystem::path& db_path,
                        const EvalOptions& options = {});

// TS: EX on every database of the suite, stopping at the first miss.
//
// Throws EmptyVariantSuite, or GoldExecutionFailed naming the variant.
bool test_suite_accuracy(std::string_view pred_sql, const Sample& sample,
                         const std::vector<std::filesystem::path>& variant_db_paths,
                         const EvalOptions& options = {});

// The TS suite for one database: the base file followed by
// `<variant_root>/<db_id>/<k>.sqlite` in increasing k.
std::vector<std::filesystem::path> variant_suite(const std::filesystem::path& base_db,
                                                 const std::filesystem::path& variant_root, std::string_view db_id);

// Evaluates every sample. Samples without a prediction fail with class
// SyntaxError and detail "missing prediction". The report does not depend
// on `parallelism`.
//
// Throws UnknownSampleId for a prediction with no sample, CorpusLayoutError
// for a missing database file, GoldExecutionFailed for a broken gold query.
EvalReport evaluate_corpus(const std::map<std::string, std::string>& predictions, const std::vector<Sample>& samples,
                           const std::filesystem::path& corpus_root,
                           const std::optional<std::filesystem::path>& variant_root, std::size_t parallelism,
                           const EvalOptions& options = {});

// Reads `{"sample_id", "db_id", "question", "gold_sql"}` lines. When a
// corpus root is given, schema_tables is filled with every table of the
// sample's database.
std::vector<Sample> load_samples(const std::filesystem::path& path,
                                 const std::optional<std::filesystem::path>& corpus_root = std::nullopt);

// Reads `{"sample_id", "sql"}` lines. Throws InvalidInput on duplicates.
std::map<std::string, std::string> load_predictions(const std::filesystem::path& path);

void write_predictions(const std::filesystem::path& path, const std::map<std::string, std::string>& predictions);

void to_json(nlohmann::json& j, const EvalVerdict& v);
void to_json(nlohmann::json& j, const EvalReport& r);

// Plain-text table with Model, EX and TS columns, percentages to one
// decimal place.
std::string format_summary_table(const EvalReport& report, std::string_view model_label);

}  // namespace sqlforge
