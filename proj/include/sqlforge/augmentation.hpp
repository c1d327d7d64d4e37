#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sqlforge/metrics.hpp"
#include "sqlforge/schema_catalog.hpp"

namespace sqlforge {

struct CrossDbProvenance {
  std::vector<std::string> inserted_table_names;  // in draw order
  std::vector<std::string> source_db_ids;         // parallel to inserted_table_names
  bool operator==(const CrossDbProvenance&) const = default;
};

struct InnerDbProvenance {
  std::vector<std::string> added_tables;     // unused tables that were kept
  std::vector<std::string> removed_tables;
  std::vector<std::string> removed_columns;  // "table.column"
  bool operator==(const InnerDbProvenance&) const = default;
};

struct UnchangedProvenance {
  std::string reason;
  bool operator==(const UnchangedProvenance&) const = default;
};

using Provenance = std::variant<CrossDbProvenance, InnerDbProvenance, UnchangedProvenance>;

struct AugmentedSample {
  Sample base;
  std::vector<TableSchema> schema_tables;
  Provenance provenance;
  std::uint64_t seed = 0;
};

struct InnerDbOptions {
  double p_table = 0.5;
  double p_col = 0.7;
  std::size_t max_tables = 6;
  std::size_t max_columns = 10;
};

enum class AugmentMode { CrossDb, InnerDb };

// Per-sample seed: FNV-1a over the global seed's bytes and the sample id.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view sample_id) noexcept;

// Tables from other databases that share a PK/FK column name with the
// sample's schema list. Tables whose name collides with one already in the
// sample's list are excluded; of several same-named candidates the first
// in corpus order wins. Returned with their source db_id.
std::vector<std::pair<std::string, TableSchema>> cross_db_candidates(const Sample& sample,
                                                                     const std::vector<DatabaseSchema>& corpus);

// Inserts 1 to 3 candidate tables at random positions of the schema list.
// Unchanged when no candidate exists.
AugmentedSample cross_db_augment(const Sample& sample, const std::vector<DatabaseSchema>& corpus, std::uint64_t seed);

// Randomly drops unused tables and columns of the sample's database, keeping
// everything the gold query references, then enforces the table and column
// caps.
//
// Throws GoldReferencesUnknownColumn when the gold query names a table or
// column the database lacks.
AugmentedSample inner_db_augment(const Sample& sample, const DatabaseSchema& database, std::uint64_t seed,
                                 const InnerDbOptions& options = {});

// Introspects every database of a corpus, in db_id order.
std::vector<DatabaseSchema> load_corpus(const std::filesystem::path& corpus_root);

// Augments every sample with seed derive_seed(global_seed, sample_id).
// Output order matches input order and does not depend on `jobs`.
std::vector<AugmentedSample> augment_samples(const std::vector<Sample>& samples,
                                             const std::vector<DatabaseSchema>& corpus, AugmentMode mode,
                                             std::uint64_t global_seed, std::size_t jobs,
                                             const InnerDbOptions& options = {});

// {"sample_id", "prompt", "completion", "provenance", "seed"}
nlohmann::json to_training_record(const AugmentedSample& sample);

void to_json(nlohmann::json& j, const Provenance& p);

}  // namespace sqlforge
