#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sqlforge/augmentation.hpp"
#include "sqlforge/model_client.hpp"

namespace sqlforge {

struct ToolConfig {
  std::optional<std::filesystem::path> corpus_root;
  std::optional<std::filesystem::path> variant_root;
  std::int64_t exec_timeout_secs = 30;
  std::size_t n_candidates = 8;
  double temperature = 0.5;
  std::size_t max_iters = 3;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string log_level = "info";
  InnerDbOptions inner_db;

  std::string generator_endpoint;  // URL or mock script
  std::string debugger_endpoint;
  EndpointConfig generator;
  EndpointConfig debugger;
};

// Defaults with jobs = default_jobs().
ToolConfig default_config();

// Reads an INI file on top of `base`:
//
//   [general]    corpus_root variant_root exec_timeout_secs jobs seed log_level
//   [augment]    p_table p_col
//   [mine]       n_candidates temperature
//   [refine]     max_iters
//   [generator]  endpoint model api_key_env max_retries max_in_flight timeout_secs
//   [debugger]   same keys as [generator]
//
// Throws ConfigError for unknown sections or keys, unparsable values and
// out-of-range values.
ToolConfig load_config(const std::filesystem::path& path, ToolConfig base = default_config());

// Throws ConfigError when a field is outside its documented range.
void check_config(const ToolConfig& config);

}  // namespace sqlforge
