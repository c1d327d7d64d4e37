#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sqlforge/executor.hpp"
#include "sqlforge/metrics.hpp"
#include "sqlforge/model_client.hpp"

namespace sqlforge {

enum class RejectedReason { ResultMismatch, ExecError, Timeout };

std::string_view to_string(RejectedReason reason) noexcept;

struct PreferencePair {
  std::string prompt;
  std::string chosen;    // the gold SQL
  std::string rejected;
  RejectedReason rejected_reason = RejectedReason::ResultMismatch;
  std::string sample_id;

  bool operator==(const PreferencePair&) const = default;
};

struct MineOptions {
  std::size_t n_candidates = 8;
  double temperature = 0.5;
  std::size_t max_tokens = 512;
  std::chrono::duration<double> timeout = kDefaultExecTimeout;
};

// Samples `n_candidates` completions for the sample's prompt and pairs the
// gold SQL with every distinct candidate whose execution disagrees with it.
// Candidates that are empty or textually equal to the gold SQL (up to
// whitespace) are ignored; execution-equivalent candidates are never
// rejected. Pairs follow candidate order.
//
// Throws GoldExecutionFailed, plus whatever the client raises.
std::vector<PreferencePair> mine_pairs(const Sample& sample, ModelClient& client,
                                       const std::filesystem::path& db_path, const MineOptions& options = {});

struct MiningStats {
  std::size_t n_samples = 0;
  std::size_t n_pairs = 0;
  std::size_t skipped_samples = 0;  // no rejected candidate
};

struct MiningResult {
  std::vector<PreferencePair> pairs;  // grouped by sample, in sample order
  MiningStats stats;
};

MiningResult mine_corpus(const std::vector<Sample>& samples, ModelClient& client,
                         const std::filesystem::path& corpus_root, std::size_t jobs, const MineOptions& options = {});

void to_json(nlohmann::json& j, const PreferencePair& p);
void to_json(nlohmann::json& j, const MiningStats& s);

}  // namespace sqlforge
