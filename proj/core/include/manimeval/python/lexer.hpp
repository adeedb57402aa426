#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace manimeval::python {

enum class TokenKind {
  keyword,
  identifier,
  number,
  string,
  op,
  punct,
  newline,
  indent,
  dedent,
  end,
  error,
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;
  int line = 1;
};

struct LexError {
  int line = 0;
  std::string message;
};

struct LexResult {
  std::vector<Token> tokens;  // always terminated by a TokenKind::end token
  std::vector<LexError> errors;

  [[nodiscard]] bool ok() const { return errors.empty(); }
};

/// Python 3 lexical analysis with layout tokens (NEWLINE / INDENT / DEDENT).
/// Never throws: problems are reported in `errors` and surface as
/// TokenKind::error tokens in the stream.
LexResult lex(std::string_view source);

bool is_keyword(std::string_view word);

/// Decoded value of a single string literal token (prefix and quotes
/// removed, common escapes resolved unless the literal is raw).
std::string decode_string_literal(std::string_view token_text);

}  // namespace manimeval::python
