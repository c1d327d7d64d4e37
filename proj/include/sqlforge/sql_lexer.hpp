#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge {

enum class TokenKind { Word, QuotedIdentifier, String, Blob, Number, Parameter, Operator, End };

enum class QuoteStyle { None, Double, Backtick, Bracket };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string_view text;  // raw slice of the input
  std::string value;      // unquoted/unescaped payload for identifiers and strings
  QuoteStyle quote = QuoteStyle::None;
  std::size_t offset = 0;

  bool is_word(std::string_view upper_keyword) const noexcept;
  bool is_op(std::string_view op) const noexcept { return kind == TokenKind::Operator && text == op; }
};

// SQLite-dialect tokenizer. Comments are dropped; the result always ends
// with a TokenKind::End token. Throws ParseError on unterminated literals
// or characters outside the dialect.
std::vector<Token> tokenize(std::string_view sql);

// Splits on top-level `;`, skipping semicolons inside literals and comments.
// Never throws: unterminated literals extend to end of input. Empty
// statements are omitted and each piece is trimmed.
std::vector<std::string_view> split_statements(std::string_view sql);

}  // namespace sqlforge
