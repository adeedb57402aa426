#include "manimeval/python/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace manimeval::python {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first so that a linear scan finds the maximal munch.
constexpr std::array<std::string_view, 48> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "=",   ".",   ",",   ":",   ";",   "(",  ")",  "[",  "]",  "{",  "}",  "!"};

bool is_punct(std::string_view op) {
  return op == "(" || op == ")" || op == "[" || op == "]" || op == "{" || op == "}" ||
         op == "," || op == ":" || op == ";" || op == "." || op == "...";
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view p) {
  if (p.size() > 2) return false;
  std::string lower;
  for (char c : p) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  LexResult run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_indentation()) continue;
      }
      if (pos_ >= src_.size()) break;
      scan_token();
    }
    if (!out_.tokens.empty() && out_.tokens.back().kind != TokenKind::newline &&
        out_.tokens.back().kind != TokenKind::dedent && out_.tokens.back().kind != TokenKind::indent) {
      push(TokenKind::newline, "", pos_, pos_);
    }
    if (depth_ > 0) error("unclosed bracket at end of input");
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::dedent, "", pos_, pos_);
    }
    push(TokenKind::end, "", pos_, pos_);
    return std::move(out_);
  }

 private:
  char peek(std::size_t off = 0) const {
    return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
  }

  void push(TokenKind kind, std::string text, std::size_t begin, std::size_t end) {
    out_.tokens.push_back(Token{kind, std::move(text), begin, end, line_});
  }

  void error(std::string message) { out_.errors.push_back({line_, std::move(message)}); }

  // Returns false when the line was blank or comment-only and got consumed.
  bool handle_indentation() {
    std::size_t col = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      if (src_[p] == '\t') col = (col / 8 + 1) * 8;
      else if (src_[p] == ' ') ++col;
      else col = 0;
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    char c = src_[p];
    if (c == '#' || c == '\n' || c == '\r') {
      // Blank or comment line: no layout tokens.
      while (p < src_.size() && src_[p] != '\n') ++p;
      if (p < src_.size()) ++p;
      pos_ = p;
      ++line_;
      return false;
    }
    if (c == '\\' && p + 1 < src_.size() && src_[p + 1] == '\n') {
      pos_ = p;
      at_line_start_ = false;
      return true;
    }
    pos_ = p;
    at_line_start_ = false;
    if (col > indents_.back()) {
      indents_.push_back(col);
      push(TokenKind::indent, "", pos_, pos_);
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        push(TokenKind::dedent, "", pos_, pos_);
      }
      if (col != indents_.back()) {
        error("unindent does not match any outer indentation level");
        push(TokenKind::error, "", pos_, pos_);
        indents_.push_back(col);
      }
    }
    return true;
  }

  void scan_token() {
    char c = peek();
    std::size_t start = pos_;
    if (c == ' ' || c == '\t' || c == '\f') {
      ++pos_;
      return;
    }
    if (c == '\r') {
      ++pos_;
      return;
    }
    if (c == '\n') {
      ++pos_;
      if (depth_ == 0) {
        if (!out_.tokens.empty() && out_.tokens.back().kind != TokenKind::newline) {
          push(TokenKind::newline, "\n", start, pos_);
        }
        at_line_start_ = true;
      }
      ++line_;
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      return;
    }
    if (c == '\\') {
      if (peek(1) == '\n') {
        pos_ += 2;
        ++line_;
        return;
      }
      if (peek(1) == '\r' && peek(2) == '\n') {
        pos_ += 3;
        ++line_;
        return;
      }
      ++pos_;
      error("unexpected character after line continuation");
      push(TokenKind::error, "\\", start, pos_);
      return;
    }
    if (ident_start(static_cast<unsigned char>(c))) {
      while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string_view word = src_.substr(start, pos_ - start);
      char q = peek();
      if ((q == '\'' || q == '"') && is_string_prefix(word)) {
        scan_string(start);
        return;
      }
      push(is_keyword(word) ? TokenKind::keyword : TokenKind::identifier, std::string(word), start,
           pos_);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      scan_number(start);
      return;
    }
    if (c == '\'' || c == '"') {
      scan_string(start);
      return;
    }
    for (auto op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        pos_ += op.size();
        if (op == "(" || op == "[" || op == "{") ++depth_;
        if ((op == ")" || op == "]" || op == "}") && depth_ > 0) --depth_;
        push(is_punct(op) ? TokenKind::punct : TokenKind::op, std::string(op), start, pos_);
        return;
      }
    }
    ++pos_;
    error(std::string("invalid character '") + c + "'");
    push(TokenKind::error, std::string(1, c), start, pos_);
  }

  void scan_number(std::size_t start) {
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
    };
    auto is_dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      pos_ += 2;
      digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
    } else if (peek() == '0' && (peek(1) == 'o' || peek(1) == 'O' || peek(1) == 'b' || peek(1) == 'B')) {
      pos_ += 2;
      digits(is_dec);
    } else {
      digits(is_dec);
      if (peek() == '.') {
        ++pos_;
        digits(is_dec);
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (std::isdigit(static_cast<unsigned char>(peek(1))) ||
           ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
        pos_ += 2;
        digits(is_dec);
      }
      if (peek() == 'j' || peek() == 'J') ++pos_;
    }
    push(TokenKind::number, std::string(src_.substr(start, pos_ - start)), start, pos_);
  }

  void scan_string(std::size_t start) {
    char quote = peek();
    bool triple = peek(1) == quote && peek(2) == quote;
    pos_ += triple ? 3 : 1;
    int start_line = line_;
    while (true) {
      if (pos_ >= src_.size()) {
        error(triple ? "unterminated triple-quoted string" : "unterminated string literal");
        push(TokenKind::error, std::string(src_.substr(start)), start, pos_);
        return;
      }
      char ch = src_[pos_];
      if (ch == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++line_;
        pos_ += 2;
        continue;
      }
      if (ch == '\n') {
        if (!triple) {
          error("unterminated string literal");
          push(TokenKind::error, std::string(src_.substr(start, pos_ - start)), start, pos_);
          return;
        }
        ++line_;
        ++pos_;
        continue;
      }
      if (ch == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (peek(1) == quote && peek(2) == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    Token tok{TokenKind::string, std::string(src_.substr(start, pos_ - start)), start, pos_, start_line};
    out_.tokens.push_back(std::move(tok));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<std::size_t> indents_;
  LexResult out_;
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

LexResult lex(std::string_view source) { return Lexer(source).run(); }

std::string decode_string_literal(std::string_view text) {
  std::size_t p = 0;
  bool raw = false;
  while (p < text.size() && text[p] != '\'' && text[p] != '"') {
    if (text[p] == 'r' || text[p] == 'R') raw = true;
    ++p;
  }
  if (p >= text.size()) return {};
  char quote = text[p];
  std::size_t qlen = (p + 2 < text.size() && text[p + 1] == quote && text[p + 2] == quote) ? 3 : 1;
  std::size_t body_begin = p + qlen;
  if (text.size() < body_begin + qlen) return {};
  std::string_view body = text.substr(body_begin, text.size() - body_begin - qlen);
  if (raw) return std::string(body);
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    char ch = body[i];
    if (ch != '\\' || i + 1 >= body.size()) {
      out.push_back(ch);
      continue;
    }
    char nx = body[++i];
    switch (nx) {
      case '\n':
        break;
      case 'n':
        out.push_back('\n');
        break;
      case 't':
        out.push_back('\t');
        break;
      case 'r':
        out.push_back('\r');
        break;
      case '\\':
      case '\'':
      case '"':
        out.push_back(nx);
        break;
      default:
        out.push_back('\\');
        out.push_back(nx);
    }
  }
  return out;
}

}  // namespace manimeval::python
