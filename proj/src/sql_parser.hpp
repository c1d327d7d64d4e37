#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sqlforge/sql_lexer.hpp"

namespace sqlforge::detail {

enum class SourceKind { Table, Subquery, Cte, TableFunction };

// One entry of a FROM clause (or the table operand of `x IN table`).
struct Source {
  SourceKind kind = SourceKind::Table;
  std::string name;   // base table or CTE name; empty for subqueries
  std::string alias;  // empty when not aliased
  int body = -1;      // first select core of a subquery or CTE body
  std::size_t offset = 0;

  // Name the source is addressed by in qualified references.
  const std::string& visible_name() const noexcept { return alias.empty() ? name : alias; }
};

struct Ref {
  std::string qualifier;  // empty for bare names
  std::string name;
  QuoteStyle quote = QuoteStyle::None;
  std::size_t offset = 0;
};

// One SELECT core. Subqueries in expressions see their enclosing core
// through `outer`; FROM subqueries and CTE bodies skip it.
struct Scope {
  int outer = -1;
  std::vector<Source> sources;
  std::vector<Source> mentions;  // `x IN table`
  std::vector<Ref> refs;
  std::vector<Ref> star_qualifiers;  // `t.*`
  std::vector<std::string> aliases;
  std::vector<std::string> outputs;
  bool outputs_known = true;
};

struct ParsedQuery {
  std::vector<Scope> scopes;
  bool has_order_by = false;
};

// Parses a single SELECT/WITH/VALUES statement (optionally ';'-terminated).
// Throws ParseError.
ParsedQuery parse_query(std::string_view sql);

bool is_reserved_word(std::string_view word) noexcept;

}  // namespace sqlforge::detail
