#include "sqlforge/sql_lexer.hpp"

#include <cctype>

#include "sqlforge/error.hpp"
#include "sqlforge/text.hpp"

namespace sqlforge {

bool Token::is_word(std::string_view upper_keyword) const noexcept {
  return kind == TokenKind::Word && iequals(text, upper_keyword);
}

namespace {

bool ident_start(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) != 0 || c == '_' || u >= 0x80;
}

bool ident_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || c == '$' || u >= 0x80;
}

bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view sql) : sql_(sql) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (true) {
      skip_trivia();
      if (pos_ >= sql_.size()) break;
      tokens.push_back(next());
    }
    Token end;
    end.offset = sql_.size();
    tokens.push_back(std::move(end));
    return tokens;
  }

 private:
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < sql_.size() ? sql_[pos_ + ahead] : '\0'; }

  void skip_trivia() {
    while (pos_ < sql_.size()) {
      const char c = sql_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) != 0) {
        ++pos_;
      } else if (c == '-' && peek(1) == '-') {
        while (pos_ < sql_.size() && sql_[pos_] != '\n') ++pos_;
      } else if (c == '/' && peek(1) == '*') {
        const auto close = sql_.find("*/", pos_ + 2);
        pos_ = close == std::string_view::npos ? sql_.size() : close + 2;
      } else {
        break;
      }
    }
  }

  Token make(TokenKind kind, std::size_t start) const {
    Token t;
    t.kind = kind;
    t.offset = start;
    t.text = sql_.substr(start, pos_ - start);
    return t;
  }

  // Reads a literal delimited by `close`, where a doubled `close` escapes it.
  std::string delimited(char close, std::size_t start, const char* what) {
    std::string value;
    ++pos_;
    while (true) {
      if (pos_ >= sql_.size()) throw ParseError(std::string("unterminated ") + what, start);
      const char c = sql_[pos_++];
      if (c == close) {
        if (close != ']' && peek() == close) {
          value.push_back(close);
          ++pos_;
          continue;
        }
        return value;
      }
      value.push_back(c);
    }
  }

  Token next() {
    const std::size_t start = pos_;
    const char c = sql_[pos_];

    if ((c == 'x' || c == 'X') && peek(1) == '\'') {
      ++pos_;
      delimited('\'', start, "blob literal");
      return make(TokenKind::Blob, start);
    }
    if (ident_start(c)) {
      while (pos_ < sql_.size() && ident_char(sql_[pos_])) ++pos_;
      Token t = make(TokenKind::Word, start);
      t.value = std::string(t.text);
      return t;
    }
    if (c == '\'') {
      std::string value = delimited('\'', start, "string literal");
      Token t = make(TokenKind::String, start);
      t.value = std::move(value);
      return t;
    }
    if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::string value = delimited(close, start, "quoted identifier");
      Token t = make(TokenKind::QuotedIdentifier, start);
      t.value = std::move(value);
      t.quote = c == '"' ? QuoteStyle::Double : (c == '`' ? QuoteStyle::Backtick : QuoteStyle::Bracket);
      return t;
    }
    if (digit(c) || (c == '.' && digit(peek(1)))) {
      if (c == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
        pos_ += 2;
        while (std::isxdigit(static_cast<unsigned char>(peek())) != 0) ++pos_;
      } else {
        while (digit(peek())) ++pos_;
        if (peek() == '.') {
          ++pos_;
          while (digit(peek())) ++pos_;
        }
        if (peek() == 'e' || peek() == 'E') {
          std::size_t save = pos_++;
          if (peek() == '+' || peek() == '-') ++pos_;
          if (!digit(peek())) {
            pos_ = save;
          } else {
            while (digit(peek())) ++pos_;
          }
        }
      }
      if (ident_start(peek())) throw ParseError("malformed number", start);
      return make(TokenKind::Number, start);
    }
    if (c == '?') {
      ++pos_;
      while (digit(peek())) ++pos_;
      return make(TokenKind::Parameter, start);
    }
    if ((c == ':' || c == '@' || c == '$') && ident_start(peek(1))) {
      ++pos_;
      while (ident_char(peek())) ++pos_;
      return make(TokenKind::Parameter, start);
    }

    static constexpr std::string_view kThreeChar[] = {"->>"};
    static constexpr std::string_view kTwoChar[] = {"||", "==", "!=", "<>", "<=", ">=", "<<", ">>", "->"};
    const std::string_view rest = sql_.substr(pos_);
    for (auto op : kThreeChar) {
      if (rest.substr(0, op.size()) == op) {
        pos_ += op.size();
        return make(TokenKind::Operator, start);
      }
    }
    for (auto op : kTwoChar) {
      if (rest.substr(0, op.size()) == op) {
        pos_ += op.size();
        return make(TokenKind::Operator, start);
      }
    }
    static constexpr std::string_view kSingle = "()+-*/%,.;=<>&|~";
    if (kSingle.find(c) != std::string_view::npos) {
      ++pos_;
      return make(TokenKind::Operator, start);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }

  std::string_view sql_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Token> tokenize(std::string_view sql) { return Lexer(sql).run(); }

std::vector<std::string_view> split_statements(std::string_view sql) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  std::size_t i = 0;
  auto emit = [&](std::size_t end) {
    auto piece = trim(sql.substr(begin, end - begin));
    if (!piece.empty()) out.push_back(piece);
  };
  auto skip_until = [&](char close) {
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
      skip_until(c);
    } else if (c == '[') {
      skip_until(']');
    } else if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      while (i < sql.size() && sql[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
      const auto close = sql.find("*/", i + 2);
      i = close == std::string_view::npos ? sql.size() : close + 2;
    } else if (c == ';') {
      emit(i);
      begin = ++i;
    } else {
      ++i;
    }
  }
  emit(sql.size());
  return out;
}

}  // namespace sqlforge
