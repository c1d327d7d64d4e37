#include "sql_parser.hpp"

#include <algorithm>
#include <iterator>
#include <optional>
#include <utility>

#include "sqlforge/error.hpp"
#include "sqlforge/text.hpp"

namespace sqlforge::detail {

namespace {

constexpr std::string_view kReserved[] = {
    "ALL",     "AND",      "AS",        "ASC",       "BETWEEN",      "BY",           "CASE",
    "CAST",    "COLLATE",  "CROSS",     "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "DELETE",
    "DESC",    "DISTINCT", "DROP",      "ELSE",      "END",          "ESCAPE",       "EXCEPT",
    "EXISTS",  "FILTER",   "FROM",      "FULL",      "GLOB",         "GROUP",        "HAVING",
    "IN",      "INDEXED",  "INNER",     "INSERT",    "INTERSECT",    "INTO",         "IS",
    "ISNULL",  "JOIN",     "LEFT",      "LIKE",      "LIMIT",        "MATCH",        "NATURAL",
    "NOT",     "NOTNULL",  "NULL",      "OFFSET",    "ON",           "OR",           "ORDER",
    "OUTER",   "OVER",     "REGEXP",    "RIGHT",     "SELECT",       "SET",          "THEN",
    "UNION",   "UPDATE",   "USING",     "VALUES",    "WHEN",         "WHERE",        "WINDOW",
    "WITH"};

class Parser {
 public:
  explicit Parser(std::string_view sql) : sql_(sql), tokens_(tokenize(sql)) {}

  ParsedQuery run() {
    if (at_end()) throw ParseError("empty statement", 0);
    parse_select_stmt(-1, true);
    while (cur().is_op(";")) {
      advance();
      if (!at_end()) throw ParseError("multiple statements are not supported", cur().offset);
    }
    if (!at_end()) fail("unexpected token '" + std::string(cur().text) + "'");
    return std::move(query_);
  }

 private:
  // --- token helpers -------------------------------------------------------

  const Token& cur() const { return tokens_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at_end() const { return cur().kind == TokenKind::End; }
  void advance() {
    if (!at_end()) ++pos_;
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, cur().offset); }

  bool accept_word(std::string_view kw) {
    if (cur().is_word(kw)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_op(std::string_view op) {
    if (cur().is_op(op)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_word(std::string_view kw) {
    if (!accept_word(kw)) fail("expected " + std::string(kw));
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) {
      fail("expected '" + std::string(op) + "'" +
           (at_end() ? std::string(" at end of input") : " near '" + std::string(cur().text) + "'"));
    }
  }

  bool is_name_token(const Token& t) const {
    return t.kind == TokenKind::QuotedIdentifier || (t.kind == TokenKind::Word && !is_reserved_word(t.text));
  }

  std::string expect_name(const char* what) {
    if (!is_name_token(cur())) fail(std::string("expected ") + what);
    std::string name = cur().value;
    advance();
    return name;
  }

  // Optional alias after a table or result column; `AS` makes it mandatory.
  std::optional<std::string> parse_alias(bool allow_string) {
    if (accept_word("AS")) {
      if (allow_string && cur().kind == TokenKind::String) {
        std::string alias = cur().value;
        advance();
        return alias;
      }
      return expect_name("alias after AS");
    }
    if (is_name_token(cur()) || (allow_string && cur().kind == TokenKind::String)) {
      std::string alias = cur().value;
      advance();
      return alias;
    }
    return std::nullopt;
  }

  bool starts_select() const {
    return cur().is_word("SELECT") || cur().is_word("WITH") || cur().is_word("VALUES");
  }

  Scope& scope() { return query_.scopes[static_cast<std::size_t>(current_)]; }

  int new_scope(int outer) {
    query_.scopes.push_back(Scope{});
    query_.scopes.back().outer = outer;
    return static_cast<int>(query_.scopes.size() - 1);
  }

  class ScopeGuard {
   public:
    ScopeGuard(Parser& p, int scope) : p_(p), saved_(p.current_) { p_.current_ = scope; }
    ~ScopeGuard() { p_.current_ = saved_; }
    ScopeGuard(const ScopeGuard&) = delete;
    ScopeGuard& operator=(const ScopeGuard&) = delete;

   private:
    Parser& p_;
    int saved_;
  };

  // --- statements ----------------------------------------------------------

  int parse_select_stmt(int outer, bool top) {
    bool pushed_ctes = false;
    if (accept_word("WITH")) {
      accept_word("RECURSIVE");
      ctes_.emplace_back();
      pushed_ctes = true;
      do {
        parse_cte(outer);
      } while (accept_op(","));
    }

    const int first = parse_core(outer);
    while (true) {
      if (accept_word("UNION")) {
        accept_word("ALL");
      } else if (!accept_word("INTERSECT") && !accept_word("EXCEPT")) {
        break;
      }
      parse_core(outer);
    }

    {
      ScopeGuard guard(*this, first);
      if (accept_word("ORDER")) {
        expect_word("BY");
        if (top) query_.has_order_by = true;
        parse_ordering_terms();
      }
      if (accept_word("LIMIT")) {
        parse_expr();
        if (accept_word("OFFSET") || accept_op(",")) parse_expr();
      }
    }

    if (pushed_ctes) ctes_.pop_back();
    return first;
  }

  void parse_cte(int outer) {
    std::string name = expect_name("common table expression name");
    std::vector<std::string> columns;
    if (accept_op("(")) {
      do {
        columns.push_back(expect_name("column name"));
      } while (accept_op(","));
      expect_op(")");
    }
    expect_word("AS");
    if (accept_word("NOT")) {
      expect_word("MATERIALIZED");
    } else {
      accept_word("MATERIALIZED");
    }
    expect_op("(");
    // Registered before the body so recursive CTEs can name themselves.
    const auto body_index = static_cast<int>(query_.scopes.size());
    ctes_.back().emplace_back(name, body_index);
    const int body = parse_select_stmt(outer, false);
    expect_op(")");
    if (!columns.empty()) {
      auto& s = query_.scopes[static_cast<std::size_t>(body)];
      s.outputs = std::move(columns);
      s.outputs_known = true;
    }
  }

  int parse_core(int outer) {
    const int index = new_scope(outer);
    ScopeGuard guard(*this, index);

    if (accept_word("VALUES")) {
      do {
        expect_op("(");
        parse_expr_list();
        expect_op(")");
      } while (accept_op(","));
      scope().outputs_known = false;
      return index;
    }

    expect_word("SELECT");
    if (!accept_word("DISTINCT")) accept_word("ALL");
    do {
      parse_result_column();
    } while (accept_op(","));

    if (accept_word("FROM")) parse_from();
    if (accept_word("WHERE")) parse_expr();
    if (accept_word("GROUP")) {
      expect_word("BY");
      parse_expr_list();
    }
    if (accept_word("HAVING")) parse_expr();
    if (accept_word("WINDOW")) {
      do {
        expect_name("window name");
        expect_word("AS");
        expect_op("(");
        parse_window_definition();
      } while (accept_op(","));
    }
    return index;
  }

  void parse_result_column() {
    if (accept_op("*")) {
      scope().outputs_known = false;
      return;
    }
    if (is_name_token(cur()) && peek().is_op(".") && peek(2).is_op("*")) {
      scope().star_qualifiers.push_back(Ref{cur().value, "*", cur().quote, cur().offset});
      pos_ += 3;
      scope().outputs_known = false;
      return;
    }
    const std::size_t start_tok = pos_;
    parse_expr();
    const std::size_t end_tok = pos_;

    std::string output;
    if (auto alias = parse_alias(true)) {
      scope().aliases.push_back(*alias);
      output = *alias;
    } else if (end_tok - start_tok == 1 && is_name_token(tokens_[start_tok])) {
      output = tokens_[start_tok].value;
    } else if (end_tok - start_tok == 3 && tokens_[start_tok + 1].is_op(".")) {
      output = tokens_[start_tok + 2].value;
    } else {
      const auto begin = tokens_[start_tok].offset;
      const auto& last = tokens_[end_tok - 1];
      output = std::string(sql_.substr(begin, last.offset + last.text.size() - begin));
    }
    scope().outputs.push_back(std::move(output));
  }

  void parse_ordering_terms() {
    do {
      parse_expr();
      if (!accept_word("ASC")) accept_word("DESC");
      if (accept_word("NULLS")) {
        if (!accept_word("FIRST")) expect_word("LAST");
      }
    } while (accept_op(","));
  }

  // --- FROM ----------------------------------------------------------------

  void parse_from() {
    parse_table_or_subquery();
    while (true) {
      if (accept_op(",")) {
        parse_table_or_subquery();
        continue;
      }
      const std::size_t save = pos_;
      accept_word("NATURAL");
      if (accept_word("LEFT") || accept_word("RIGHT") || accept_word("FULL")) {
        accept_word("OUTER");
      } else if (!accept_word("INNER")) {
        accept_word("CROSS");
      }
      if (!accept_word("JOIN")) {
        if (pos_ != save) fail("expected JOIN");
        return;
      }
      parse_table_or_subquery();
      if (accept_word("ON")) {
        parse_expr();
      } else if (accept_word("USING")) {
        expect_op("(");
        const Source& right = scope().sources.back();
        const std::string right_name = right.visible_name();
        do {
          const Token& t = cur();
          std::string column = expect_name("column name in USING");
          // Must exist on the right side, and on some table to the left.
          if (!right_name.empty()) scope().refs.push_back(Ref{right_name, column, t.quote, t.offset});
          if (scope().sources.size() == 2 && !scope().sources.front().visible_name().empty()) {
            scope().refs.push_back(Ref{scope().sources.front().visible_name(), column, t.quote, t.offset});
          }
        } while (accept_op(","));
        expect_op(")");
      }
    }
  }

  void parse_table_or_subquery() {
    if (accept_op("(")) {
      if (starts_select()) {
        const std::size_t offset = cur().offset;
        const int body = parse_select_stmt(scope().outer, false);
        expect_op(")");
        Source source{SourceKind::Subquery, {}, parse_alias(false).value_or(""), body, offset};
        scope().sources.push_back(std::move(source));
      } else {
        parse_from();
        expect_op(")");
        // An alias on a parenthesized join has no addressable meaning here.
        parse_alias(false);
      }
      return;
    }

    const Token& first = cur();
    if (!is_name_token(first)) fail("expected table name");
    std::string name = first.value;
    const std::size_t offset = first.offset;
    advance();
    if (accept_op(".")) name = expect_name("table name");

    if (cur().is_op("(")) {
      // Table-valued function such as json_each(...).
      advance();
      if (!cur().is_op(")")) parse_expr_list();
      expect_op(")");
      Source source{SourceKind::TableFunction, name, parse_alias(false).value_or(""), -1, offset};
      scope().sources.push_back(std::move(source));
      return;
    }

    Source source;
    source.name = name;
    source.offset = offset;
    if (auto body = lookup_cte(name)) {
      source.kind = SourceKind::Cte;
      source.body = *body;
    }
    source.alias = parse_alias(false).value_or("");
    if (accept_word("INDEXED")) {
      expect_word("BY");
      expect_name("index name");
    } else if (cur().is_word("NOT") && peek().is_word("INDEXED")) {
      pos_ += 2;
    }
    scope().sources.push_back(std::move(source));
  }

  std::optional<int> lookup_cte(std::string_view name) const {
    for (auto frame = ctes_.rbegin(); frame != ctes_.rend(); ++frame) {
      for (const auto& [cte_name, body] : *frame) {
        if (iequals(cte_name, name)) return body;
      }
    }
    return std::nullopt;
  }

  // --- expressions ---------------------------------------------------------

  void parse_expr_list() {
    do {
      parse_expr();
    } while (accept_op(","));
  }

  void parse_expr(bool stop_at_and = false) {
    parse_prefix();
    while (parse_infix(stop_at_and)) {
    }
  }

  void parse_prefix() {
    while (cur().is_op("-") || cur().is_op("+") || cur().is_op("~") ||
           (cur().is_word("NOT") && !peek().is_word("EXISTS"))) {
      advance();
    }
    if (cur().is_word("NOT")) advance();  // NOT EXISTS
    parse_primary();
  }

  bool parse_infix(bool stop_at_and) {
    static constexpr std::string_view kBinaryOps[] = {"=",  "==", "!=", "<>", "<",  "<=", ">",  ">=", "||",
                                                      "+",  "-",  "*",  "/",  "%",  "&",  "|",  "<<", ">>",
                                                      "->", "->>"};
    const Token& t = cur();
    if (t.kind == TokenKind::Operator) {
      for (auto op : kBinaryOps) {
        if (t.text == op) {
          advance();
          parse_prefix();
          return true;
        }
      }
      return false;
    }
    if (t.kind != TokenKind::Word) return false;

    if (t.is_word("OR") || (t.is_word("AND") && !stop_at_and)) {
      advance();
      parse_prefix();
      return true;
    }
    if (t.is_word("IS")) {
      advance();
      accept_word("NOT");
      if (accept_word("DISTINCT")) expect_word("FROM");
      parse_prefix();
      return true;
    }
    if (t.is_word("ISNULL") || t.is_word("NOTNULL")) {
      advance();
      return true;
    }
    if (t.is_word("COLLATE")) {
      advance();
      if (cur().kind != TokenKind::Word && cur().kind != TokenKind::QuotedIdentifier) fail("expected collation name");
      advance();
      return true;
    }

    const bool negated = t.is_word("NOT");
    const Token& op = negated ? peek() : t;
    if (negated && op.is_word("NULL")) {
      pos_ += 2;
      return true;
    }
    if (op.is_word("IN")) {
      pos_ += negated ? 2 : 1;
      parse_in_rhs();
      return true;
    }
    if (op.is_word("LIKE") || op.is_word("GLOB") || op.is_word("REGEXP") || op.is_word("MATCH")) {
      pos_ += negated ? 2 : 1;
      parse_prefix();
      if (accept_word("ESCAPE")) parse_prefix();
      return true;
    }
    if (op.is_word("BETWEEN")) {
      pos_ += negated ? 2 : 1;
      parse_expr(true);
      expect_word("AND");
      parse_prefix();
      return true;
    }
    if (negated) fail("unexpected NOT");
    return false;
  }

  void parse_in_rhs() {
    if (accept_op("(")) {
      if (starts_select()) {
        parse_select_stmt(current_, false);
      } else if (!cur().is_op(")")) {
        parse_expr_list();
      }
      expect_op(")");
      return;
    }
    const Token& t = cur();
    if (!is_name_token(t)) fail("expected list, subquery or table after IN");
    std::string name = t.value;
    const std::size_t offset = t.offset;
    advance();
    if (accept_op(".")) name = expect_name("table name");
    if (accept_op("(")) {
      if (!cur().is_op(")")) parse_expr_list();
      expect_op(")");
      return;
    }
    Source mention;
    mention.name = name;
    mention.offset = offset;
    if (auto body = lookup_cte(name)) {
      mention.kind = SourceKind::Cte;
      mention.body = *body;
    }
    scope().mentions.push_back(std::move(mention));
  }

  void parse_primary() {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::Blob:
      case TokenKind::Parameter:
        advance();
        return;
      case TokenKind::End:
        fail("unexpected end of statement");
      case TokenKind::Operator:
        if (t.is_op("(")) {
          advance();
          if (starts_select()) {
            parse_select_stmt(current_, false);
          } else {
            parse_expr_list();
          }
          expect_op(")");
          return;
        }
        fail("unexpected '" + std::string(t.text) + "'");
      case TokenKind::QuotedIdentifier:
        parse_column_ref();
        return;
      case TokenKind::Word:
        break;
    }

    if (t.is_word("NULL") || t.is_word("TRUE") || t.is_word("FALSE") || t.is_word("CURRENT_DATE") ||
        t.is_word("CURRENT_TIME") || t.is_word("CURRENT_TIMESTAMP")) {
      advance();
      return;
    }
    if (t.is_word("EXISTS")) {
      advance();
      expect_op("(");
      parse_select_stmt(current_, false);
      expect_op(")");
      return;
    }
    if (t.is_word("CAST")) {
      advance();
      expect_op("(");
      parse_expr();
      expect_word("AS");
      parse_type_name();
      expect_op(")");
      return;
    }
    if (t.is_word("CASE")) {
      advance();
      if (!cur().is_word("WHEN")) parse_expr();
      if (!cur().is_word("WHEN")) fail("expected WHEN");
      while (accept_word("WHEN")) {
        parse_expr();
        expect_word("THEN");
        parse_expr();
      }
      if (accept_word("ELSE")) parse_expr();
      expect_word("END");
      return;
    }
    if (t.is_word("RAISE")) {
      advance();
      skip_parenthesized();
      return;
    }
    if (peek().is_op("(") && !is_reserved_word(t.text)) {
      parse_function_call();
      return;
    }
    if (is_reserved_word(t.text)) fail("unexpected keyword " + std::string(t.text));
    parse_column_ref();
  }

  void parse_type_name() {
    if (cur().kind != TokenKind::Word) fail("expected type name");
    while (cur().kind == TokenKind::Word && !cur().is_word("AS")) advance();
    if (accept_op("(")) {
      if (!accept_op("-")) accept_op("+");
      if (cur().kind != TokenKind::Number) fail("expected type size");
      advance();
      if (accept_op(",")) {
        if (!accept_op("-")) accept_op("+");
        if (cur().kind != TokenKind::Number) fail("expected type size");
        advance();
      }
      expect_op(")");
    }
  }

  void parse_function_call() {
    advance();  // name
    expect_op("(");
    if (accept_op("*")) {
      expect_op(")");
    } else if (!accept_op(")")) {
      if (!accept_word("DISTINCT")) accept_word("ALL");
      parse_expr_list();
      if (accept_word("ORDER")) {
        expect_word("BY");
        parse_ordering_terms();
      }
      expect_op(")");
    }
    if (accept_word("FILTER")) {
      expect_op("(");
      expect_word("WHERE");
      parse_expr();
      expect_op(")");
    }
    if (accept_word("OVER")) {
      if (accept_op("(")) {
        parse_window_definition();
      } else {
        expect_name("window name");
      }
    }
  }

  // After the opening parenthesis; consumes the closing one.
  void parse_window_definition() {
    if (is_name_token(cur()) && !cur().is_word("PARTITION") && !cur().is_word("ROWS") &&
        !cur().is_word("RANGE") && !cur().is_word("GROUPS")) {
      advance();
    }
    if (accept_word("PARTITION")) {
      expect_word("BY");
      parse_expr_list();
    }
    if (accept_word("ORDER")) {
      expect_word("BY");
      parse_ordering_terms();
    }
    if (cur().is_word("ROWS") || cur().is_word("RANGE") || cur().is_word("GROUPS")) {
      // Frame bounds carry only literals and keywords in practice.
      int depth = 0;
      while (!at_end() && !(depth == 0 && cur().is_op(")"))) {
        if (cur().is_op("(")) ++depth;
        if (cur().is_op(")")) --depth;
        advance();
      }
    }
    expect_op(")");
  }

  void skip_parenthesized() {
    expect_op("(");
    int depth = 1;
    while (depth > 0) {
      if (at_end()) fail("unbalanced parentheses");
      if (cur().is_op("(")) ++depth;
      if (cur().is_op(")")) --depth;
      advance();
    }
  }

  void parse_column_ref() {
    std::vector<const Token*> parts{&cur()};
    advance();
    while (cur().is_op(".") && parts.size() < 3) {
      advance();
      if (!is_name_token(cur())) fail("expected column name after '.'");
      parts.push_back(&cur());
      advance();
    }
    Ref ref;
    ref.name = parts.back()->value;
    ref.quote = parts.back()->quote;
    ref.offset = parts.front()->offset;
    if (parts.size() >= 2) ref.qualifier = parts[parts.size() - 2]->value;
    scope().refs.push_back(std::move(ref));
  }

  std::string_view sql_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  ParsedQuery query_;
  int current_ = -1;
  std::vector<std::vector<std::pair<std::string, int>>> ctes_;
};

}  // namespace

bool is_reserved_word(std::string_view word) noexcept {
  const auto match = [&](std::string_view kw) { return iequals(kw, word); };
  return std::any_of(std::begin(kReserved), std::end(kReserved), match);
}

ParsedQuery parse_query(std::string_view sql) { return Parser(sql).run(); }

}  // namespace sqlforge::detail
