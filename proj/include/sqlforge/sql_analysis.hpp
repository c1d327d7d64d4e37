#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "sqlforge/schema_catalog.hpp"

namespace sqlforge {

// Table slot for a column that could not be attributed to one table.
inline constexpr std::string_view kUnresolvedTable = "<unresolved>";

struct CaseInsensitiveLess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const noexcept;
};

struct ColumnRef {
  std::string table;
  std::string column;
};

struct ColumnRefLess {
  bool operator()(const ColumnRef& a, const ColumnRef& b) const noexcept;
};

struct SqlReferences {
  std::set<std::string, CaseInsensitiveLess> tables;
  std::set<ColumnRef, ColumnRefLess> columns;
  bool has_order_by = false;  // top-level ORDER BY

  bool references(std::string_view table, std::string_view column) const;
};

// Extracts the base tables and columns a query touches. Aliases resolve to
// base tables; columns of FROM subqueries and CTEs are recorded where the
// subquery reads them. Without a schema, an unqualified column is attributed
// to the scope's table only when the scope has exactly one base table, and
// unqualified double-quoted tokens are read as string literals. With a
// schema, names resolve against the catalog and stored identifier case is
// used in the result.
//
// Throws ParseError for malformed SQL.
SqlReferences extract_references(std::string_view sql);
SqlReferences extract_references(std::string_view sql, const DatabaseSchema& schema);

enum class ValidityStatus {
  Valid,
  SyntaxError,
  WrongTableName,
  WrongColumnName,
  MissingQuotation,
  // Produced by the execution half of the invalid check, never by validate().
  RuntimeError,
  Timeout,
};

std::string_view to_string(ValidityStatus status) noexcept;
std::optional<ValidityStatus> parse_validity_status(std::string_view name) noexcept;

struct ValidityReport {
  ValidityStatus status = ValidityStatus::Valid;
  std::string detail;  // empty iff Valid

  bool valid() const noexcept { return status == ValidityStatus::Valid; }
  bool operator==(const ValidityReport&) const = default;
};

struct ValidateOptions {
  // Space and '/' always count as special characters. When set, so does
  // every character outside [A-Za-z0-9_].
  bool any_non_word_is_special = true;
};

// Static validity check against a schema. Reports the first defect in the
// order SyntaxError, WrongTableName, WrongColumnName, MissingQuotation, by
// position within a class. Never throws.
//
// An unquoted identifier containing special characters is detected
// lexically. The statement is then re-checked with that identifier quoted,
// so parse or name errors caused only by the missing quotes are reported as
// MissingQuotation.
ValidityReport validate(std::string_view sql, const DatabaseSchema& schema, const ValidateOptions& options = {});

// True when `name` contains a character that requires quoting.
bool needs_quoting(std::string_view name, const ValidateOptions& options = {});

}  // namespace sqlforge
