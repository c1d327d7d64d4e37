#include "sqlforge/sql_analysis.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>
#include <vector>

#include "sql_parser.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/text.hpp"
#include "sqlite_connection.hpp"

namespace sqlforge {

namespace {

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

int compare_ci(std::string_view a, std::string_view b) noexcept {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const char x = fold(a[i]);
    const char y = fold(b[i]);
    if (x != y) return x < y ? -1 : 1;
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

}  // namespace

bool CaseInsensitiveLess::operator()(std::string_view a, std::string_view b) const noexcept {
  return compare_ci(a, b) < 0;
}

bool ColumnRefLess::operator()(const ColumnRef& a, const ColumnRef& b) const noexcept {
  const int t = compare_ci(a.table, b.table);
  if (t != 0) return t < 0;
  return compare_ci(a.column, b.column) < 0;
}

bool SqlReferences::references(std::string_view table, std::string_view column) const {
  return columns.count(ColumnRef{std::string(table), std::string(column)}) > 0;
}

std::string_view to_string(ValidityStatus status) noexcept {
  switch (status) {
    case ValidityStatus::Valid: return "Valid";
    case ValidityStatus::SyntaxError: return "SyntaxError";
    case ValidityStatus::WrongTableName: return "WrongTableName";
    case ValidityStatus::WrongColumnName: return "WrongColumnName";
    case ValidityStatus::MissingQuotation: return "MissingQuotation";
    case ValidityStatus::RuntimeError: return "RuntimeError";
    case ValidityStatus::Timeout: return "Timeout";
  }
  return "Unknown";
}

std::optional<ValidityStatus> parse_validity_status(std::string_view name) noexcept {
  for (auto s : {ValidityStatus::Valid, ValidityStatus::SyntaxError, ValidityStatus::WrongTableName,
                 ValidityStatus::WrongColumnName, ValidityStatus::MissingQuotation, ValidityStatus::RuntimeError,
                 ValidityStatus::Timeout}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

namespace {

using detail::ParsedQuery;
using detail::Ref;
using detail::Scope;
using detail::Source;
using detail::SourceKind;

bool is_rowid_alias(std::string_view name) {
  return iequals(name, "rowid") || iequals(name, "oid") || iequals(name, "_rowid_");
}

struct Issue {
  ValidityStatus status;
  std::size_t offset;
  std::string detail;
};

// Walks the parsed scopes, resolving names to base tables and columns.
// With a schema, undefined names are collected as issues.
class Resolver {
 public:
  Resolver(const ParsedQuery& query, const DatabaseSchema* schema) : query_(query), schema_(schema) {}

  SqlReferences run() {
    refs_.has_order_by = query_.has_order_by;
    for (const auto& scope : query_.scopes) {
      for (const auto& source : scope.sources) resolve_table(source);
      for (const auto& mention : scope.mentions) resolve_table(mention);
    }
    for (std::size_t i = 0; i < query_.scopes.size(); ++i) {
      const auto index = static_cast<int>(i);
      for (const auto& star : query_.scopes[i].star_qualifiers) {
        if (!find_qualified(index, star.qualifier)) {
          issue(ValidityStatus::WrongTableName, star.offset, star.qualifier + " is not a table or alias in scope");
        }
      }
      for (const auto& ref : query_.scopes[i].refs) {
        if (ref.qualifier.empty()) {
          resolve_bare(index, ref);
        } else {
          resolve_qualified(index, ref);
        }
      }
    }
    return std::move(refs_);
  }

  std::vector<Issue>& issues() { return issues_; }

 private:
  const Scope& scope(int index) const { return query_.scopes[static_cast<std::size_t>(index)]; }

  void issue(ValidityStatus status, std::size_t offset, std::string detail) {
    issues_.push_back(Issue{status, offset, std::move(detail)});
  }

  const TableSchema* table_of(const Source& source) const {
    if (schema_ == nullptr || source.kind != SourceKind::Table) return nullptr;
    return schema_->find_table(source.name);
  }

  void resolve_table(const Source& source) {
    if (source.kind != SourceKind::Table) return;
    if (schema_ == nullptr) {
      refs_.tables.insert(source.name);
      return;
    }
    if (const TableSchema* table = schema_->find_table(source.name)) {
      refs_.tables.insert(table->name);
    } else {
      issue(ValidityStatus::WrongTableName, source.offset, source.name + " not in database " + schema_->db_id);
    }
  }

  // Innermost-first lookup of a qualifier along the scope chain.
  const Source* find_qualified(int index, std::string_view qualifier) const {
    for (int s = index; s >= 0; s = scope(s).outer) {
      for (const auto& source : scope(s).sources) {
        if (!source.visible_name().empty() && iequals(source.visible_name(), qualifier)) return &source;
      }
    }
    return nullptr;
  }

  bool output_matches(const Source& source, std::string_view column) const {
    if (source.body < 0) return true;
    const Scope& body = scope(source.body);
    if (!body.outputs_known) return true;
    return std::any_of(body.outputs.begin(), body.outputs.end(),
                       [&](const std::string& out) { return iequals(out, column); });
  }

  void resolve_qualified(int index, const Ref& ref) {
    const Source* source = find_qualified(index, ref.qualifier);
    if (source == nullptr) {
      if (schema_ != nullptr) {
        issue(ValidityStatus::WrongTableName, ref.offset, ref.qualifier + " is not a table or alias in scope");
      } else {
        refs_.columns.insert(ColumnRef{std::string(kUnresolvedTable), ref.name});
      }
      return;
    }
    if (source->kind != SourceKind::Table) {
      if (schema_ != nullptr && !output_matches(*source, ref.name)) {
        issue(ValidityStatus::WrongColumnName, ref.offset, ref.name + " not in " + source->visible_name());
      }
      return;
    }
    if (schema_ == nullptr) {
      refs_.columns.insert(ColumnRef{source->name, ref.name});
      return;
    }
    const TableSchema* table = table_of(*source);
    if (table == nullptr) return;  // already reported as a table issue
    if (const ColumnSchema* column = table->find_column(ref.name)) {
      refs_.columns.insert(ColumnRef{table->name, column->name});
    } else if (!is_rowid_alias(ref.name)) {
      issue(ValidityStatus::WrongColumnName, ref.offset, ref.name + " not in " + table->name);
    }
  }

  bool is_select_alias(const Scope& s, std::string_view name) const {
    return std::any_of(s.aliases.begin(), s.aliases.end(), [&](const std::string& a) { return iequals(a, name); });
  }

  void resolve_bare(int index, const Ref& ref) {
    if (schema_ == nullptr) {
      resolve_bare_without_schema(index, ref);
      return;
    }
    for (int s = index; s >= 0; s = scope(s).outer) {
      std::vector<const TableSchema*> definite;
      bool maybe = false;
      for (const auto& source : scope(s).sources) {
        if (source.kind == SourceKind::Table) {
          const TableSchema* table = table_of(source);
          if (table == nullptr) {
            maybe = true;  // unknown table, reported elsewhere
          } else if (table->has_column(ref.name) || is_rowid_alias(ref.name)) {
            definite.push_back(table);
          }
        } else if (output_matches(source, ref.name)) {
          maybe = true;
        }
      }
      if (definite.size() == 1 && !maybe) {
        if (const ColumnSchema* column = definite.front()->find_column(ref.name)) {
          refs_.columns.insert(ColumnRef{definite.front()->name, column->name});
        }
        return;
      }
      if (!definite.empty()) {
        if (!is_rowid_alias(ref.name)) refs_.columns.insert(ColumnRef{std::string(kUnresolvedTable), ref.name});
        return;
      }
      if (maybe || is_select_alias(scope(s), ref.name)) return;
    }
    if (ref.quote == QuoteStyle::Double) return;  // string literal in double quotes

    const auto& sources = scope(index).sources;
    std::string where;
    for (const auto& source : sources) {
      if (!where.empty()) where += ", ";
      where += source.visible_name();
    }
    issue(ValidityStatus::WrongColumnName, ref.offset,
          ref.name + " not in " + (where.empty() ? std::string("any table in scope") : where));
  }

  void resolve_bare_without_schema(int index, const Ref& ref) {
    for (int s = index; s >= 0; s = scope(s).outer) {
      const Scope& current = scope(s);
      if (is_select_alias(current, ref.name)) return;
      if (current.sources.empty()) continue;
      if (ref.quote == QuoteStyle::Double) return;
      if (current.sources.size() == 1) {
        const Source& only = current.sources.front();
        if (only.kind == SourceKind::Table && !is_rowid_alias(ref.name)) {
          refs_.columns.insert(ColumnRef{only.name, ref.name});
        }
        return;
      }
      refs_.columns.insert(ColumnRef{std::string(kUnresolvedTable), ref.name});
      return;
    }
    if (ref.quote != QuoteStyle::Double) refs_.columns.insert(ColumnRef{std::string(kUnresolvedTable), ref.name});
  }

  const ParsedQuery& query_;
  const DatabaseSchema* schema_;
  SqlReferences refs_;
  std::vector<Issue> issues_;
};

int priority(ValidityStatus status) {
  switch (status) {
    case ValidityStatus::SyntaxError: return 0;
    case ValidityStatus::WrongTableName: return 1;
    case ValidityStatus::WrongColumnName: return 2;
    case ValidityStatus::MissingQuotation: return 3;
    default: return 4;
  }
}

ValidityReport check_names(std::string_view sql, const DatabaseSchema& schema) {
  ParsedQuery parsed;
  try {
    parsed = detail::parse_query(sql);
  } catch (const ParseError& e) {
    std::string detail = e.what();
    if (e.position() != std::string::npos) detail += " at offset " + std::to_string(e.position());
    return {ValidityStatus::SyntaxError, detail};
  }
  Resolver resolver(parsed, &schema);
  resolver.run();
  auto& issues = resolver.issues();
  if (issues.empty()) return {};
  const auto first = std::min_element(issues.begin(), issues.end(), [](const Issue& a, const Issue& b) {
    return std::tuple(priority(a.status), a.offset) < std::tuple(priority(b.status), b.offset);
  });
  return {first->status, first->detail};
}

struct QuotationSpan {
  std::size_t offset;
  std::size_t length;
  std::string identifier;
};

bool word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

bool space_char(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Length of the unquoted spelling of `identifier` at `sql[pos]`, or 0.
// A space in the identifier matches any whitespace run.
std::size_t match_identifier(std::string_view sql, std::size_t pos, std::string_view identifier) {
  std::size_t i = pos;
  for (std::size_t k = 0; k < identifier.size(); ++k) {
    const char want = identifier[k];
    if (space_char(want)) {
      if (i >= sql.size() || !space_char(sql[i])) return 0;
      while (i < sql.size() && space_char(sql[i])) ++i;
      while (k + 1 < identifier.size() && space_char(identifier[k + 1])) ++k;
      continue;
    }
    if (i >= sql.size() || fold(sql[i]) != fold(want)) return 0;
    ++i;
  }
  if (word_char(identifier.back()) && i < sql.size() && word_char(sql[i])) return 0;
  return i - pos;
}

std::vector<QuotationSpan> find_unquoted_identifiers(std::string_view sql, const DatabaseSchema& schema,
                                                     const ValidateOptions& options) {
  std::vector<std::string> special;
  auto add = [&](const std::string& name) {
    if (!needs_quoting(name, options) || !word_char(name.front())) return;
    if (std::none_of(special.begin(), special.end(), [&](const std::string& s) { return iequals(s, name); })) {
      special.push_back(name);
    }
  };
  for (const auto& table : schema.tables) {
    add(table.name);
    for (const auto& column : table.columns) add(column.name);
  }
  if (special.empty()) return {};
  std::stable_sort(special.begin(), special.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  std::vector<QuotationSpan> spans;
  std::size_t i = 0;
  auto skip_delimited = [&](char close) {
    ++i;
    while (i < sql.size()) {
      if (sql[i] == close) {
        if (close != ']' && i + 1 < sql.size() && sql[i + 1] == close) {
          i += 2;
          continue;
        }
        ++i;
        return;
      }
      ++i;
    }
  };
  while (i < sql.size()) {
    const char c = sql[i];
    if (c == '\'' || c == '"' || c == '`') {
      skip_delimited(c);
      continue;
    }
    if (c == '[') {
      skip_delimited(']');
      continue;
    }
    if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      while (i < sql.size() && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
      const auto close = sql.find("*/", i + 2);
      i = close == std::string_view::npos ? sql.size() : close + 2;
      continue;
    }
    if (word_char(c) && (i == 0 || !word_char(sql[i - 1]))) {
      bool matched = false;
      for (const auto& name : special) {
        if (const std::size_t len = match_identifier(sql, i, name)) {
          spans.push_back(QuotationSpan{i, len, name});
          i += len;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      while (i < sql.size() && word_char(sql[i])) ++i;
      continue;
    }
    ++i;
  }
  return spans;
}

}  // namespace

bool needs_quoting(std::string_view name, const ValidateOptions& options) {
  return std::any_of(name.begin(), name.end(), [&](char c) {
    if (c == ' ' || c == '/') return true;
    return options.any_non_word_is_special && !(std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_');
  });
}

SqlReferences extract_references(std::string_view sql) {
  const ParsedQuery parsed = detail::parse_query(sql);
  return Resolver(parsed, nullptr).run();
}

SqlReferences extract_references(std::string_view sql, const DatabaseSchema& schema) {
  const ParsedQuery parsed = detail::parse_query(sql);
  return Resolver(parsed, &schema).run();
}

ValidityReport validate(std::string_view sql, const DatabaseSchema& schema, const ValidateOptions& options) {
  const auto spans = find_unquoted_identifiers(sql, schema, options);
  if (spans.empty()) return check_names(sql, schema);

  std::string repaired;
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    repaired.append(sql.substr(cursor, span.offset - cursor));
    repaired += detail::quote_identifier(span.identifier);
    cursor = span.offset + span.length;
  }
  repaired.append(sql.substr(cursor));

  ValidityReport report = check_names(repaired, schema);
  if (!report.valid()) return report;
  return {ValidityStatus::MissingQuotation, spans.front().identifier + " must be quoted"};
}

}  // namespace sqlforge
