#include "sqlite_connection.hpp"

#include <system_error>

#include "sqlforge/error.hpp"

namespace sqlforge::detail {

SqliteConnection::SqliteConnection(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw FileNotFound("database file not found: " + path.string());
  }
  const int rc = sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    std::string message = db_ != nullptr ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
    sqlite3_close(db_);
    db_ = nullptr;
    throw IoError("cannot open " + path.string() + ": " + message);
  }
  // sqlite3_open_v2 is lazy; touching the catalog validates the header.
  char* err = nullptr;
  const int check = sqlite3_exec(db_, "PRAGMA query_only = 1; SELECT count(*) FROM sqlite_master;", nullptr,
                                 nullptr, &err);
  if (check != SQLITE_OK) {
    std::string message = err != nullptr ? err : sqlite3_errstr(check);
    sqlite3_free(err);
    sqlite3_close(db_);
    db_ = nullptr;
    if (check == SQLITE_NOTADB || check == SQLITE_CORRUPT) {
      throw NotADatabase(path.string() + ": " + message);
    }
    throw IoError(path.string() + ": " + message);
  }
}

SqliteConnection::~SqliteConnection() { sqlite3_close(db_); }

Statement::Statement(sqlite3* db, std::string_view sql, const char** tail) {
  prepare_status_ = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, tail);
}

Statement::~Statement() { sqlite3_finalize(stmt_); }

Statement& Statement::operator=(Statement&& other) noexcept {
  if (this != &other) {
    sqlite3_finalize(stmt_);
    stmt_ = other.stmt_;
    prepare_status_ = other.prepare_status_;
    other.stmt_ = nullptr;
  }
  return *this;
}

std::string Statement::column_text(int index) const {
  const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, index));
  if (text == nullptr) return {};
  return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, index)));
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace sqlforge::detail
