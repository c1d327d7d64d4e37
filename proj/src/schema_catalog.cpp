#include "sqlforge/schema_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sqlforge/error.hpp"
#include "sqlforge/text.hpp"
#include "sqlite_connection.hpp"

namespace sqlforge {

namespace fs = std::filesystem;
using detail::quote_identifier;
using detail::SqliteConnection;
using detail::Statement;

const ColumnSchema* TableSchema::find_column(std::string_view column) const noexcept {
  for (const auto& c : columns) {
    if (iequals(c.name, column)) return &c;
  }
  return nullptr;
}

const TableSchema* DatabaseSchema::find_table(std::string_view table) const noexcept {
  for (const auto& t : tables) {
    if (iequals(t.name, table)) return &t;
  }
  return nullptr;
}

std::vector<std::string> DatabaseSchema::key_column_names(const std::vector<TableSchema>& restrict_to) const {
  auto in_scope = [&](std::string_view table) {
    if (restrict_to.empty()) return true;
    return std::any_of(restrict_to.begin(), restrict_to.end(),
                       [&](const TableSchema& t) { return iequals(t.name, table); });
  };
  std::vector<std::string> names;
  auto add = [&](const std::string& name) {
    if (std::none_of(names.begin(), names.end(), [&](const std::string& n) { return iequals(n, name); })) {
      names.push_back(name);
    }
  };
  for (const auto& table : tables) {
    if (!in_scope(table.name)) continue;
    for (const auto& column : table.columns) {
      if (column.is_primary_key) add(column.name);
    }
  }
  for (const auto& fk : foreign_keys) {
    if (in_scope(fk.from_table)) add(fk.from_column);
    if (in_scope(fk.to_table)) add(fk.to_column);
  }
  return names;
}

namespace {

void check_step(int rc, const SqliteConnection& conn, const fs::path& path) {
  if (rc != SQLITE_ROW && rc != SQLITE_DONE) {
    throw IoError(path.string() + ": " + conn.last_error());
  }
}

Statement prepare_or_throw(const SqliteConnection& conn, const std::string& sql, const fs::path& path) {
  Statement stmt(conn.get(), sql);
  if (stmt.prepare_status() != SQLITE_OK) {
    throw IoError(path.string() + ": " + conn.last_error());
  }
  return stmt;
}

std::vector<std::string> read_sample_values(const SqliteConnection& conn, const fs::path& path,
                                            const std::string& table, const std::string& column,
                                            std::size_t limit) {
  const std::string col = quote_identifier(column);
  const std::string sql = "SELECT DISTINCT " + col + " FROM " + quote_identifier(table) + " WHERE " + col +
                          " IS NOT NULL LIMIT " + std::to_string(limit);
  auto stmt = prepare_or_throw(conn, sql, path);
  std::vector<std::string> values;
  int rc;
  while ((rc = stmt.step()) == SQLITE_ROW) {
    if (sqlite3_column_type(stmt.get(), 0) == SQLITE_BLOB) {
      values.emplace_back("<blob>");
    } else {
      values.push_back(stmt.column_text(0));
    }
  }
  check_step(rc, conn, path);
  return values;
}

}  // namespace

DatabaseSchema introspect_database(const fs::path& path, std::string db_id, std::size_t sample_value_count) {
  SqliteConnection conn(path);
  DatabaseSchema schema;
  schema.db_id = std::move(db_id);
  schema.file_path = path;

  {
    auto stmt = prepare_or_throw(
        conn, "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
              "ORDER BY rowid",
        path);
    int rc;
    while ((rc = stmt.step()) == SQLITE_ROW) schema.tables.push_back(TableSchema{stmt.column_text(0), {}});
    check_step(rc, conn, path);
  }

  for (auto& table : schema.tables) {
    auto stmt = prepare_or_throw(conn, "PRAGMA table_info(" + quote_identifier(table.name) + ")", path);
    int rc;
    while ((rc = stmt.step()) == SQLITE_ROW) {
      ColumnSchema column;
      column.name = stmt.column_text(1);
      column.declared_type = stmt.column_text(2);
      column.is_primary_key = sqlite3_column_int(stmt.get(), 5) > 0;
      table.columns.push_back(std::move(column));
    }
    check_step(rc, conn, path);
    if (sample_value_count > 0) {
      for (auto& column : table.columns) {
        column.sample_values = read_sample_values(conn, path, table.name, column.name, sample_value_count);
      }
    }
  }

  for (const auto& table : schema.tables) {
    auto stmt = prepare_or_throw(conn, "PRAGMA foreign_key_list(" + quote_identifier(table.name) + ")", path);
    int rc;
    while ((rc = stmt.step()) == SQLITE_ROW) {
      const int seq = sqlite3_column_int(stmt.get(), 1);
      ForeignKey fk{table.name, stmt.column_text(3), stmt.column_text(2), stmt.column_text(4)};
      const TableSchema* target = schema.find_table(fk.to_table);
      if (target != nullptr && sqlite3_column_type(stmt.get(), 4) == SQLITE_NULL) {
        // Implicit reference to the target's primary key.
        int pk_index = 0;
        for (const auto& column : target->columns) {
          if (column.is_primary_key && pk_index++ == seq) fk.to_column = column.name;
        }
      }
      const ColumnSchema* from = table.find_column(fk.from_column);
      const ColumnSchema* to = target != nullptr ? target->find_column(fk.to_column) : nullptr;
      if (from == nullptr || to == nullptr) {
        spdlog::warn("{}: dropping dangling foreign key {}.{} -> {}.{}", schema.db_id, fk.from_table,
                     fk.from_column, fk.to_table, fk.to_column);
        continue;
      }
      fk.from_column = from->name;
      fk.to_table = target->name;
      fk.to_column = to->name;
      schema.foreign_keys.push_back(std::move(fk));
    }
    check_step(rc, conn, path);
  }
  return schema;
}

fs::path corpus_database_path(const fs::path& corpus_root, std::string_view db_id) {
  const std::string id(db_id);
  return corpus_root / "database" / id / (id + ".sqlite");
}

std::vector<std::string> list_corpus_databases(const fs::path& corpus_root) {
  const fs::path dir = corpus_root / "database";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw FileNotFound("corpus database directory not found: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const std::string id = entry.path().filename().string();
    if (fs::is_regular_file(corpus_database_path(corpus_root, id), ec)) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string render_identifier(std::string_view name) {
  const bool plain = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
  });
  return plain ? std::string(name) : quote_identifier(name);
}

std::string render_prompt(const std::vector<TableSchema>& schema_list, std::string_view question,
                          const PromptOptions& options) {
  if (schema_list.empty()) throw EmptySchemaList("render_prompt requires at least one table");
  if (trim(question).empty()) throw InvalidInput("render_prompt requires a non-empty question");

  std::ostringstream out;
  for (const auto& table : schema_list) {
    out << "CREATE TABLE " << render_identifier(table.name) << '(';
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      const auto& column = table.columns[i];
      if (i > 0) out << ", ";
      out << render_identifier(column.name);
      if (options.include_types) {
        if (!column.declared_type.empty()) out << ' ' << column.declared_type;
        if (column.is_primary_key) out << " PRIMARY KEY";
      }
      if (options.include_sample_values && !column.sample_values.empty()) {
        out << " /* e.g. ";
        for (std::size_t v = 0; v < column.sample_values.size(); ++v) {
          if (v > 0) out << ", ";
          std::string value = column.sample_values[v];
          std::replace(value.begin(), value.end(), '\n', ' ');
          // Keep the comment closed.
          for (std::size_t pos; (pos = value.find("*/")) != std::string::npos;) value.replace(pos, 2, "* /");
          out << value;
        }
        out << " */";
      }
    }
    out << ");\n";
  }
  out << kPromptInstruction << '\n';
  std::string q(question);
  std::replace(q.begin(), q.end(), '\n', ' ');
  out << "-- " << q << '\n';
  return out.str();
}

void to_json(nlohmann::json& j, const ColumnSchema& c) {
  j = nlohmann::json{{"name", c.name},
                     {"declared_type", c.declared_type},
                     {"is_primary_key", c.is_primary_key},
                     {"sample_values", c.sample_values}};
}

void from_json(const nlohmann::json& j, ColumnSchema& c) {
  j.at("name").get_to(c.name);
  c.declared_type = j.value("declared_type", std::string{});
  c.is_primary_key = j.value("is_primary_key", false);
  c.sample_values = j.value("sample_values", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const TableSchema& t) { j = nlohmann::json{{"name", t.name}, {"columns", t.columns}}; }

void from_json(const nlohmann::json& j, TableSchema& t) {
  j.at("name").get_to(t.name);
  j.at("columns").get_to(t.columns);
}

void to_json(nlohmann::json& j, const ForeignKey& fk) {
  j = nlohmann::json{{"from_table", fk.from_table},
                     {"from_column", fk.from_column},
                     {"to_table", fk.to_table},
                     {"to_column", fk.to_column}};
}

void from_json(const nlohmann::json& j, ForeignKey& fk) {
  j.at("from_table").get_to(fk.from_table);
  j.at("from_column").get_to(fk.from_column);
  j.at("to_table").get_to(fk.to_table);
  j.at("to_column").get_to(fk.to_column);
}

void to_json(nlohmann::json& j, const DatabaseSchema& s) {
  j = nlohmann::json{{"db_id", s.db_id},
                     {"file_path", s.file_path.string()},
                     {"tables", s.tables},
                     {"foreign_keys", s.foreign_keys}};
}

void from_json(const nlohmann::json& j, DatabaseSchema& s) {
  j.at("db_id").get_to(s.db_id);
  s.file_path = j.value("file_path", std::string{});
  j.at("tables").get_to(s.tables);
  s.foreign_keys = j.value("foreign_keys", std::vector<ForeignKey>{});
}

}  // namespace sqlforge
