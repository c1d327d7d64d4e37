#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sqlforge {

struct ColumnSchema {
  std::string name;
  std::string declared_type;
  bool is_primary_key = false;
  // First K distinct non-null values, rendered as text.
  std::vector<std::string> sample_values;

  bool operator==(const ColumnSchema&) const = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSchema> columns;  // physical order

  const ColumnSchema* find_column(std::string_view column) const noexcept;
  bool has_column(std::string_view column) const noexcept { return find_column(column) != nullptr; }

  bool operator==(const TableSchema&) const = default;
};

struct ForeignKey {
  std::string from_table;
  std::string from_column;
  std::string to_table;
  std::string to_column;

  bool operator==(const ForeignKey&) const = default;
};

// One database file's catalog. Immutable once built; safe to share.
struct DatabaseSchema {
  std::string db_id;
  std::filesystem::path file_path;
  std::vector<TableSchema> tables;
  std::vector<ForeignKey> foreign_keys;

  const TableSchema* find_table(std::string_view table) const noexcept;

  // Names of columns that participate in a primary key or a foreign key
  // (either end), restricted to the given tables when non-empty.
  std::vector<std::string> key_column_names(const std::vector<TableSchema>& restrict_to = {}) const;

  bool operator==(const DatabaseSchema&) const = default;
};

// Reads tables, columns, primary keys and foreign keys from an SQLite file
// through a read-only connection. Internal `sqlite_%` tables are skipped.
//
// Throws FileNotFound, NotADatabase or IoError.
DatabaseSchema introspect_database(const std::filesystem::path& path, std::string db_id,
                                   std::size_t sample_value_count = 0);

// `<root>/database/<db_id>/<db_id>.sqlite`
std::filesystem::path corpus_database_path(const std::filesystem::path& corpus_root, std::string_view db_id);

// Every db_id directory under `<root>/database`, sorted.
std::vector<std::string> list_corpus_databases(const std::filesystem::path& corpus_root);

struct PromptOptions {
  // Append declared types and PRIMARY KEY markers after column names.
  bool include_types = false;
  // Append a `/* e.g. ... */` comment with sample values when present.
  bool include_sample_values = false;
};

inline constexpr std::string_view kPromptInstruction =
    "-- Using valid SQLite, answer the following questions for the tables provided above.";

// Renders the schema list and question into the generation prompt:
//
//   CREATE TABLE <name>(<col>, <col>, ...);
//   ...
//   -- Using valid SQLite, answer the following questions for the tables provided above.
//   -- <question>
//
// Throws EmptySchemaList when `schema_list` is empty, InvalidInput when the
// question is empty.
std::string render_prompt(const std::vector<TableSchema>& schema_list, std::string_view question,
                          const PromptOptions& options = {});

// Renders a single identifier for DDL, double-quoting it when it contains a
// character outside [A-Za-z0-9_].
std::string render_identifier(std::string_view name);

void to_json(nlohmann::json& j, const ColumnSchema& c);
void from_json(const nlohmann::json& j, ColumnSchema& c);
void to_json(nlohmann::json& j, const TableSchema& t);
void from_json(const nlohmann::json& j, TableSchema& t);
void to_json(nlohmann::json& j, const ForeignKey& fk);
void from_json(const nlohmann::json& j, ForeignKey& fk);
void to_json(nlohmann::json& j, const DatabaseSchema& s);
void from_json(const nlohmann::json& j, DatabaseSchema& s);

}  // namespace sqlforge
