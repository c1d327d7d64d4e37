#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace sqlforge {

struct BlobDigest {
  std::string sha256_hex;
  bool operator==(const BlobDigest&) const = default;
};

// A normalized result cell: Null, Integer, Real, Text or the digest of a
// Blob. Reals with an integral value are stored as Integer.
class CellValue {
 public:
  using Storage = std::variant<std::monostate, std::int64_t, double, std::string, BlobDigest>;

  CellValue() = default;
  static CellValue null() { return CellValue{}; }
  static CellValue integer(std::int64_t v) { return CellValue(Storage{v}); }
  static CellValue real(double v);
  static CellValue text(std::string v) { return CellValue(Storage{std::move(v)}); }
  static CellValue blob(std::string_view bytes);

  bool is_null() const noexcept { return std::holds_alternative<std::monostate>(value_); }
  bool is_integer() const noexcept { return std::holds_alternative<std::int64_t>(value_); }
  bool is_real() const noexcept { return std::holds_alternative<double>(value_); }
  bool is_text() const noexcept { return std::holds_alternative<std::string>(value_); }
  bool is_blob() const noexcept { return std::holds_alternative<BlobDigest>(value_); }

  const Storage& storage() const noexcept { return value_; }

  // Exact structural equality (no tolerance).
  bool operator==(const CellValue&) const = default;

 private:
  explicit CellValue(Storage v) : value_(std::move(v)) {}
  Storage value_;
};

using Row = std::vector<CellValue>;

enum class OutcomeKind { Rows, ExecError, Timeout };

std::string_view to_string(OutcomeKind kind) noexcept;

struct ExecutionOutcome {
  OutcomeKind kind = OutcomeKind::Rows;
  std::vector<Row> rows;       // meaningful iff kind == Rows
  std::string error_message;   // meaningful iff kind == ExecError
  std::chrono::duration<double> elapsed{0};

  bool ok() const noexcept { return kind == OutcomeKind::Rows; }

  static ExecutionOutcome make_rows(std::vector<Row> rows) {
    ExecutionOutcome o;
    o.rows = std::move(rows);
    return o;
  }
  static ExecutionOutcome make_error(std::string message) {
    ExecutionOutcome o;
    o.kind = OutcomeKind::ExecError;
    o.error_message = std::move(message);
    return o;
  }
  static ExecutionOutcome make_timeout() {
    ExecutionOutcome o;
    o.kind = OutcomeKind::Timeout;
    return o;
  }
};

inline constexpr std::chrono::seconds kDefaultExecTimeout{30};

// Runs one query on a private read-only connection. Statement failures
// (including attempted writes and multiple statements) come back as
// ExecError; exceeding `timeout` interrupts the query and yields Timeout.
//
// Throws FileNotFound or NotADatabase for an unusable database file.
ExecutionOutcome execute(const std::filesystem::path& db_path, std::string_view sql,
                         std::chrono::duration<double> timeout = kDefaultExecTimeout);

struct MatchOptions {
  bool order_sensitive = false;
  // Compare distinct rows only (set semantics) instead of multisets.
  bool set_semantics = false;
  double real_relative_tolerance = 1e-6;
};

// Cell comparison used by results_match: Integer and Real compare
// numerically with relative tolerance; Text exactly; Blobs by digest.
bool cells_match(const CellValue& a, const CellValue& b, double relative_tolerance = 1e-6) noexcept;

// EX comparison. False when `pred` is not Rows.
//
// Throws GoldExecutionFailed when `gold` is not Rows.
bool results_match(const ExecutionOutcome& pred, const ExecutionOutcome& gold, const MatchOptions& options = {});

void to_json(nlohmann::json& j, const CellValue& cell);
void to_json(nlohmann::json& j, const ExecutionOutcome& outcome);

}  // namespace sqlforge
