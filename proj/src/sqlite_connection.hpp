#pragma once

#include <sqlite3.h>

#include <filesystem>
#include <string>
#include <string_view>

namespace sqlforge::detail {

// Owning handle for a read-only SQLite connection.
class SqliteConnection {
 public:
  // Throws FileNotFound when the path does not exist, NotADatabase when the
  // file is not an SQLite database, IoError otherwise.
  explicit SqliteConnection(const std::filesystem::path& path);
  ~SqliteConnection();

  SqliteConnection(const SqliteConnection&) = delete;
  SqliteConnection& operator=(const SqliteConnection&) = delete;

  sqlite3* get() const noexcept { return db_; }
  std::string last_error() const { return sqlite3_errmsg(db_); }

 private:
  sqlite3* db_ = nullptr;
};

// Owning handle for a prepared statement.
class Statement {
 public:
  Statement() = default;
  Statement(sqlite3* db, std::string_view sql, const char** tail = nullptr);
  ~Statement();

  Statement(Statement&& other) noexcept : stmt_(other.stmt_) { other.stmt_ = nullptr; }
  Statement& operator=(Statement&& other) noexcept;
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  sqlite3_stmt* get() const noexcept { return stmt_; }
  explicit operator bool() const noexcept { return stmt_ != nullptr; }
  int prepare_status() const noexcept { return prepare_status_; }

  // SQLITE_ROW, SQLITE_DONE or an error code.
  int step() { return sqlite3_step(stmt_); }
  std::string column_text(int index) const;

 private:
  sqlite3_stmt* stmt_ = nullptr;
  int prepare_status_ = SQLITE_OK;
};

std::string quote_identifier(std::string_view name);

}  // namespace sqlforge::detail
