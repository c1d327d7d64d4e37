#include "sqlforge/executor.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sqlforge/error.hpp"
#include "sqlforge/sql_lexer.hpp"
#include "sqlforge/text.hpp"
#include "sqlite_connection.hpp"

namespace sqlforge {

namespace {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_callback(void* data) {
  auto* deadline = static_cast<Deadline*>(data);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;
  }
  return 0;
}

CellValue read_cell(sqlite3_stmt* stmt, int column) {
  switch (sqlite3_column_type(stmt, column)) {
    case SQLITE_INTEGER: return CellValue::integer(sqlite3_column_int64(stmt, column));
    case SQLITE_FLOAT: return CellValue::real(sqlite3_column_double(stmt, column));
    case SQLITE_TEXT: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, column));
      return CellValue::text(std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, column))));
    }
    case SQLITE_BLOB: {
      const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt, column));
      return CellValue::blob(std::string_view(data, static_cast<std::size_t>(sqlite3_column_bytes(stmt, column))));
    }
    default: return CellValue::null();
  }
}

}  // namespace

CellValue CellValue::real(double v) {
  // 2^63 is exactly representable; anything below it fits in int64.
  constexpr double kInt64Bound = 9223372036854775808.0;
  if (std::isfinite(v) && v == std::floor(v) && v >= -kInt64Bound && v < kInt64Bound) {
    return CellValue(Storage{static_cast<std::int64_t>(v)});
  }
  return CellValue(Storage{v});
}

CellValue CellValue::blob(std::string_view bytes) { return CellValue(Storage{BlobDigest{sha256_hex(bytes)}}); }

std::string_view to_string(OutcomeKind kind) noexcept {
  switch (kind) {
    case OutcomeKind::Rows: return "Rows";
    case OutcomeKind::ExecError: return "ExecError";
    case OutcomeKind::Timeout: return "Timeout";
  }
  return "Unknown";
}

ExecutionOutcome execute(const std::filesystem::path& db_path, std::string_view sql,
                         std::chrono::duration<double> timeout) {
  const auto started = std::chrono::steady_clock::now();
  detail::SqliteConnection conn(db_path);

  auto finish = [&](ExecutionOutcome outcome) {
    outcome.elapsed = std::chrono::steady_clock::now() - started;
    return outcome;
  };

  const auto statements = split_statements(sql);
  if (statements.empty()) return finish(ExecutionOutcome::make_error("empty statement"));

  Deadline deadline{started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(timeout)};
  sqlite3_progress_handler(conn.get(), 1000, progress_callback, &deadline);

  const char* tail = nullptr;
  detail::Statement stmt(conn.get(), sql, &tail);
  if (stmt.prepare_status() != SQLITE_OK) {
    if (deadline.expired) return finish(ExecutionOutcome::make_timeout());
    return finish(ExecutionOutcome::make_error(conn.last_error()));
  }
  if (!stmt) return finish(ExecutionOutcome::make_error("empty statement"));
  if (tail != nullptr) {
    const std::string_view rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
    if (!split_statements(rest).empty()) {
      return finish(ExecutionOutcome::make_error("multiple statements are not supported"));
    }
  }
  if (sqlite3_stmt_readonly(stmt.get()) == 0) {
    return finish(ExecutionOutcome::make_error("attempt to write a readonly database"));
  }

  std::vector<Row> rows;
  const int columns = sqlite3_column_count(stmt.get());
  int rc;
  while ((rc = stmt.step()) == SQLITE_ROW) {
    Row row;
    row.reserve(static_cast<std::size_t>(columns));
    for (int c = 0; c < columns; ++c) row.push_back(read_cell(stmt.get(), c));
    rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    if (deadline.expired || rc == SQLITE_INTERRUPT) return finish(ExecutionOutcome::make_timeout());
    return finish(ExecutionOutcome::make_error(conn.last_error()));
  }
  return finish(ExecutionOutcome::make_rows(std::move(rows)));
}

namespace {

int type_rank(const CellValue& v) {
  if (v.is_null()) return 0;
  if (v.is_integer() || v.is_real()) return 1;
  if (v.is_text()) return 2;
  return 3;
}

double as_double(const CellValue& v) {
  if (v.is_integer()) return static_cast<double>(std::get<std::int64_t>(v.storage()));
  return std::get<double>(v.storage());
}

// Total order used to canonicalize row multisets.
int compare_cells(const CellValue& a, const CellValue& b) {
  const int ra = type_rank(a);
  const int rb = type_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 1: {
      if (a.is_integer() && b.is_integer()) {
        const auto x = std::get<std::int64_t>(a.storage());
        const auto y = std::get<std::int64_t>(b.storage());
        return x < y ? -1 : (x > y ? 1 : 0);
      }
      const double x = as_double(a);
      const double y = as_double(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    case 2: return std::get<std::string>(a.storage()).compare(std::get<std::string>(b.storage()));
    case 3: return std::get<BlobDigest>(a.storage()).sha256_hex.compare(std::get<BlobDigest>(b.storage()).sha256_hex);
    default: return 0;
  }
}

bool row_less(const Row& a, const Row& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (const int c = compare_cells(a[i], b[i]); c != 0) return c < 0;
  }
  return a.size() < b.size();
}

bool rows_match(const Row& a, const Row& b, double tolerance) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!cells_match(a[i], b[i], tolerance)) return false;
  }
  return true;
}

std::vector<Row> canonical(const std::vector<Row>& rows, const MatchOptions& options) {
  std::vector<Row> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), row_less);
  if (options.set_semantics) {
    auto last = std::unique(sorted.begin(), sorted.end(), [&](const Row& a, const Row& b) {
      return rows_match(a, b, options.real_relative_tolerance);
    });
    sorted.erase(last, sorted.end());
  }
  return sorted;
}

bool lists_match(const std::vector<Row>& a, const std::vector<Row>& b, double tolerance) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!rows_match(a[i], b[i], tolerance)) return false;
  }
  return true;
}

}  // namespace

bool cells_match(const CellValue& a, const CellValue& b, double relative_tolerance) noexcept {
  const int ra = type_rank(a);
  if (ra != type_rank(b)) return false;
  if (ra == 1) {
    if (a.is_integer() && b.is_integer()) return a == b;
    const double x = as_double(a);
    const double y = as_double(b);
    if (x == y) return true;
    return std::fabs(x - y) <= relative_tolerance * std::max(std::fabs(x), std::fabs(y));
  }
  return a == b;
}

bool results_match(const ExecutionOutcome& pred, const ExecutionOutcome& gold, const MatchOptions& options) {
  if (!gold.ok()) {
    throw GoldExecutionFailed(gold.kind == OutcomeKind::Timeout ? std::string("gold query timed out")
                                                                : "gold query failed: " + gold.error_message);
  }
  if (!pred.ok()) return false;
  if (options.order_sensitive) {
    if (!options.set_semantics) return lists_match(pred.rows, gold.rows, options.real_relative_tolerance);
    // Ordered set semantics: drop adjacent duplicates only.
    auto dedupe = [&](const std::vector<Row>& rows) {
      std::vector<Row> out;
      for (const auto& row : rows) {
        if (out.empty() || !rows_match(out.back(), row, options.real_relative_tolerance)) out.push_back(row);
      }
      return out;
    };
    return lists_match(dedupe(pred.rows), dedupe(gold.rows), options.real_relative_tolerance);
  }
  if (!options.set_semantics && pred.rows.size() != gold.rows.size()) return false;
  return lists_match(canonical(pred.rows, options), canonical(gold.rows, options), options.real_relative_tolerance);
}

void to_json(nlohmann::json& j, const CellValue& cell) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          j = nullptr;
        } else if constexpr (std::is_same_v<T, BlobDigest>) {
          j = nlohmann::json{{"blob_sha256", v.sha256_hex}};
        } else {
          j = v;
        }
      },
      cell.storage());
}

void to_json(nlohmann::json& j, const ExecutionOutcome& outcome) {
  j = nlohmann::json{{"kind", to_string(outcome.kind)}, {"elapsed_secs", outcome.elapsed.count()}};
  if (outcome.kind == OutcomeKind::Rows) {
    j["rows"] = outcome.rows;
  } else if (outcome.kind == OutcomeKind::ExecError) {
    j["error_message"] = outcome.error_message;
  }
}

}  // namespace sqlforge
