#include "manimeval/python/parser.hpp"

#include <exception>
#include <initializer_list>
#include <utility>
#include <vector>

#include "manimeval/python/lexer.hpp"

namespace manimeval::python {
namespace {

struct PNode {
  std::string kind;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t anchor = 0;
  std::vector<PNode> children;
};

struct ParseFailure : std::exception {};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  PNode module(std::size_t source_size) {
    PNode root{"Module", {}, 0, source_size, 0, {}};
    while (!at(TokenKind::end)) {
      if (at(TokenKind::dedent) || at(TokenKind::newline)) {
        ++pos_;
        continue;
      }
      root.children.push_back(statement());
      drain_pending(root);
    }
    return root;
  }

 private:
  // ---- token helpers -------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  bool at(TokenKind k) const { return cur().kind == k; }
  bool at_sym(std::string_view s) const {
    return (cur().kind == TokenKind::op || cur().kind == TokenKind::punct) && cur().text == s;
  }
  bool at_kw(std::string_view s) const { return cur().kind == TokenKind::keyword && cur().text == s; }

  const Token& take() {
    const Token& t = toks_[pos_];
    if (t.kind != TokenKind::end) ++pos_;
    last_end_ = t.end;
    return t;
  }
  const Token& expect_sym(std::string_view s) {
    if (!at_sym(s)) throw ParseFailure{};
    return take();
  }
  const Token& expect_kw(std::string_view s) {
    if (!at_kw(s)) throw ParseFailure{};
    return take();
  }
  const Token& expect(TokenKind k) {
    if (!at(k)) throw ParseFailure{};
    return take();
  }
  bool accept_sym(std::string_view s) {
    if (!at_sym(s)) return false;
    take();
    return true;
  }
  bool accept_kw(std::string_view s) {
    if (!at_kw(s)) return false;
    take();
    return true;
  }

  PNode make(std::string kind, std::size_t begin, std::string text = {}) {
    PNode n;
    n.kind = std::move(kind);
    n.text = std::move(text);
    n.begin = begin;
    n.anchor = begin;
    n.end = begin;
    return n;
  }
  PNode finish(PNode n) {
    n.end = std::max(n.begin, last_end_);
    return n;
  }
  PNode leaf(std::string kind, const Token& t, std::string text = {}) {
    PNode n{std::move(kind), std::move(text), t.begin, t.end, t.begin, {}};
    return n;
  }

  bool starts_expression() const {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::identifier:
      case TokenKind::number:
      case TokenKind::string:
        return true;
      case TokenKind::keyword:
        return t.text == "not" || t.text == "lambda" || t.text == "await" || t.text == "None" ||
               t.text == "True" || t.text == "False";
      case TokenKind::op:
      case TokenKind::punct:
        return t.text == "-" || t.text == "+" || t.text == "~" || t.text == "*" || t.text == "(" ||
               t.text == "[" || t.text == "{" || t.text == "...";
      default:
        return false;
    }
  }

  // ---- statements ----------------------------------------------------

  PNode statement() {
    std::size_t start = pos_;
    try {
      return statement_unchecked();
    } catch (const ParseFailure&) {
      pos_ = start;
      pending_.clear();
      return recover();
    }
  }

  PNode recover() {
    PNode err = make(std::string(kErrorKind), cur().begin);
    if (at(TokenKind::indent)) {
      take();
      while (!at(TokenKind::dedent) && !at(TokenKind::end)) {
        err.children.push_back(statement());
        drain_pending(err);
      }
      if (at(TokenKind::dedent)) take();
      return finish(std::move(err));
    }
    bool consumed = false;
    while (!at(TokenKind::end)) {
      if (at(TokenKind::newline)) {
        take();
        consumed = true;
        break;
      }
      if (at(TokenKind::dedent) && consumed) break;
      take();
      consumed = true;
    }
    if (!consumed && !at(TokenKind::end)) take();
    if (at(TokenKind::indent)) {
      take();
      while (!at(TokenKind::dedent) && !at(TokenKind::end)) {
        err.children.push_back(statement());
        drain_pending(err);
      }
      if (at(TokenKind::dedent)) take();
    }
    return finish(std::move(err));
  }

  PNode statement_unchecked() {
    if (at(TokenKind::keyword)) {
      const auto& k = cur().text;
      if (k == "if") return if_stmt();
      if (k == "while") return while_stmt();
      if (k == "for") return for_stmt(cur().begin, false);
      if (k == "try") return try_stmt();
      if (k == "with") return with_stmt(cur().begin, false);
      if (k == "def") return funcdef(cur().begin, {}, false);
      if (k == "class") return classdef(cur().begin, {});
      if (k == "async") return async_stmt(cur().begin, {});
    }
    if (at_sym("@")) return decorated();
    if (at(TokenKind::indent) || at(TokenKind::error)) throw ParseFailure{};
    return simple_statements();
  }

  // `a; b` yields `a`; the trailing statements wait in pending_ until the
  // enclosing block appends them as siblings.
  PNode simple_statements() {
    PNode first = small_statement();
    std::vector<PNode> extra;
    while (accept_sym(";")) {
      if (at(TokenKind::newline) || at(TokenKind::end)) break;
      extra.push_back(small_statement());
    }
    if (!at(TokenKind::end)) expect(TokenKind::newline);
    for (auto& e : extra) pending_.push_back(std::move(e));
    return first;
  }

  PNode small_statement() {
    const Token& t = cur();
    if (t.kind == TokenKind::keyword) {
      if (t.text == "pass") return leaf("Pass", take());
      if (t.text == "break") return leaf("Break", take());
      if (t.text == "continue") return leaf("Continue", take());
      if (t.text == "return") {
        PNode n = make("Return", take().begin);
        if (starts_expression()) n.children.push_back(testlist_star_expr());
        return finish(std::move(n));
      }
      if (t.text == "raise") {
        PNode n = make("Raise", take().begin);
        if (starts_expression()) {
          n.children.push_back(test());
          if (accept_kw("from")) n.children.push_back(test());
        }
        return finish(std::move(n));
      }
      if (t.text == "global" || t.text == "nonlocal") {
        PNode n = make(t.text == "global" ? "Global" : "Nonlocal", take().begin);
        n.text = expect(TokenKind::identifier).text;
        while (accept_sym(",")) n.text += "," + expect(TokenKind::identifier).text;
        return finish(std::move(n));
      }
      if (t.text == "del") {
        PNode n = make("Delete", take().begin);
        n.children.push_back(exprlist());
        return finish(std::move(n));
      }
      if (t.text == "assert") {
        PNode n = make("Assert", take().begin);
        n.children.push_back(test());
        if (accept_sym(",")) n.children.push_back(test());
        return finish(std::move(n));
      }
      if (t.text == "import") return import_name();
      if (t.text == "from") return import_from();
      if (t.text == "yield") {
        PNode n = make("Expr", t.begin);
        n.children.push_back(yield_expr());
        return finish(std::move(n));
      }
    }
    return expr_statement();
  }

  PNode import_name() {
    PNode n = make("Import", take().begin);
    do {
      n.children.push_back(dotted_alias());
    } while (accept_sym(","));
    return finish(std::move(n));
  }

  std::string dotted_name() {
    std::string name = expect(TokenKind::identifier).text;
    while (at_sym(".") && ahead(1).kind == TokenKind::identifier) {
      take();
      name += "." + take().text;
    }
    return name;
  }

  PNode dotted_alias() {
    PNode a = make("alias", cur().begin);
    a.text = dotted_name();
    if (accept_kw("as")) expect(TokenKind::identifier);
    return finish(std::move(a));
  }

  PNode import_from() {
    PNode n = make("ImportFrom", take().begin);
    std::string module;
    while (at_sym(".") || at_sym("...")) module += take().text;
    if (at(TokenKind::identifier)) module += dotted_name();
    if (module.empty()) throw ParseFailure{};
    n.text = module;
    expect_kw("import");
    if (at_sym("*")) {
      PNode a = leaf("alias", take(), "*");
      n.children.push_back(std::move(a));
      return finish(std::move(n));
    }
    bool paren = accept_sym("(");
    do {
      if (paren && at_sym(")")) break;
      PNode a = make("alias", cur().begin);
      a.text = expect(TokenKind::identifier).text;
      if (accept_kw("as")) expect(TokenKind::identifier);
      n.children.push_back(finish(std::move(a)));
    } while (accept_sym(","));
    if (paren) expect_sym(")");
    return finish(std::move(n));
  }

  static bool is_augassign(const Token& t) {
    static constexpr std::string_view ops[] = {"+=", "-=",  "*=",  "/=",  "//=", "%=", "@=",
                                               "&=", "|=",  "^=",  ">>=", "<<=", "**="};
    if (t.kind != TokenKind::op) return false;
    for (auto o : ops)
      if (t.text == o) return true;
    return false;
  }

  static std::string binop_kind(std::string_view op) {
    if (op == "+") return "Add";
    if (op == "-") return "Sub";
    if (op == "*") return "Mult";
    if (op == "@") return "MatMult";
    if (op == "/") return "Div";
    if (op == "//") return "FloorDiv";
    if (op == "%") return "Mod";
    if (op == "**") return "Pow";
    if (op == "<<") return "LShift";
    if (op == ">>") return "RShift";
    if (op == "|") return "BitOr";
    if (op == "^") return "BitXor";
    if (op == "&") return "BitAnd";
    return "UnknownOp";
  }

  PNode expr_statement() {
    std::size_t begin = cur().begin;
    PNode first = testlist_star_expr();
    if (at_sym(":")) {
      take();
      PNode n = make("AnnAssign", begin);
      n.children.push_back(std::move(first));
      n.children.push_back(test());
      if (accept_sym("=")) n.children.push_back(at_kw("yield") ? yield_expr() : testlist_star_expr());
      return finish(std::move(n));
    }
    if (is_augassign(cur())) {
      const Token& op = take();
      PNode n = make("AugAssign", begin);
      n.children.push_back(std::move(first));
      n.children.push_back(leaf(binop_kind(std::string_view(op.text).substr(0, op.text.size() - 1)), op));
      n.children.push_back(at_kw("yield") ? yield_expr() : testlist_star_expr());
      return finish(std::move(n));
    }
    if (at_sym("=")) {
      PNode n = make("Assign", begin);
      n.children.push_back(std::move(first));
      while (accept_sym("=")) n.children.push_back(at_kw("yield") ? yield_expr() : testlist_star_expr());
      return finish(std::move(n));
    }
    PNode n = make("Expr", begin);
    n.children.push_back(std::move(first));
    return finish(std::move(n));
  }

  // Parses `: NEWLINE INDENT stmts DEDENT` or `: simple_stmt` into `into`.
  void suite(PNode& into) {
    expect_sym(":");
    if (!at(TokenKind::newline)) {
      into.children.push_back(simple_statements());
      drain_pending(into);
      return;
    }
    take();
    expect(TokenKind::indent);
    while (!at(TokenKind::dedent) && !at(TokenKind::end)) {
      into.children.push_back(statement());
      drain_pending(into);
    }
    if (at(TokenKind::dedent)) take();
  }

  void drain_pending(PNode& into) {
    for (auto& p : pending_) into.children.push_back(std::move(p));
    pending_.clear();
  }

  PNode if_stmt() {
    PNode n = make("If", take().begin);
    n.children.push_back(namedexpr_test());
    suite(n);
    if (at_kw("elif")) {
      n.children.push_back(if_stmt());
    } else if (accept_kw("else")) {
      suite(n);
    }
    return finish(std::move(n));
  }

  PNode while_stmt() {
    PNode n = make("While", take().begin);
    n.children.push_back(namedexpr_test());
    suite(n);
    if (accept_kw("else")) suite(n);
    return finish(std::move(n));
  }

  PNode for_stmt(std::size_t begin, bool async) {
    expect_kw("for");
    PNode n = make(async ? "AsyncFor" : "For", begin);
    n.children.push_back(exprlist());
    expect_kw("in");
    n.children.push_back(testlist());
    suite(n);
    if (accept_kw("else")) suite(n);
    return finish(std::move(n));
  }

  PNode try_stmt() {
    PNode n = make("Try", take().begin);
    suite(n);
    bool handled = false;
    while (at_kw("except")) {
      PNode h = make("ExceptHandler", take().begin);
      accept_sym("*");
      if (!at_sym(":")) {
        h.children.push_back(test());
        if (accept_sym(",")) h.children.push_back(test());
        if (accept_kw("as")) h.text = expect(TokenKind::identifier).text;
      }
      suite(h);
      n.children.push_back(finish(std::move(h)));
      handled = true;
    }
    if (accept_kw("else")) suite(n);
    if (accept_kw("finally")) {
      suite(n);
      handled = true;
    }
    if (!handled) throw ParseFailure{};
    return finish(std::move(n));
  }

  PNode with_stmt(std::size_t begin, bool async) {
    expect_kw("with");
    PNode n = make(async ? "AsyncWith" : "With", begin);
    if (!parenthesized_with_items(n)) {
      do {
        n.children.push_back(with_item());
      } while (accept_sym(","));
    }
    suite(n);
    return finish(std::move(n));
  }

  PNode with_item() {
    PNode item = make("withitem", cur().begin);
    item.children.push_back(test());
    if (accept_kw("as")) item.children.push_back(expr());
    return finish(std::move(item));
  }

  // `with (a as x, b as y,):` form. Backtracks when the parentheses turn out
  // to be an ordinary expression such as `with (yield x):` or `with (a, b)[0]:`.
  bool parenthesized_with_items(PNode& n) {
    if (!at_sym("(")) return false;
    const std::size_t saved_pos = pos_, saved_end = last_end_;
    try {
      take();
      std::vector<PNode> items;
      while (!at_sym(")")) {
        items.push_back(with_item());
        if (!accept_sym(",")) break;
      }
      expect_sym(")");
      if (!items.empty() && at_sym(":")) {
        for (auto& item : items) n.children.push_back(std::move(item));
        return true;
      }
    } catch (const ParseFailure&) {
    }
    pos_ = saved_pos;
    last_end_ = saved_end;
    return false;
  }

  PNode async_stmt(std::size_t begin, std::vector<PNode> decorators) {
    expect_kw("async");
    if (at_kw("def")) return funcdef(begin, std::move(decorators), true);
    if (!decorators.empty()) throw ParseFailure{};
    if (at_kw("for")) return for_stmt(begin, true);
    if (at_kw("with")) return with_stmt(begin, true);
    throw ParseFailure{};
  }

  PNode decorated() {
    std::size_t begin = cur().begin;
    std::vector<PNode> decorators;
    while (accept_sym("@")) {
      decorators.push_back(namedexpr_test());
      expect(TokenKind::newline);
    }
    if (at_kw("def")) return funcdef(begin, std::move(decorators), false);
    if (at_kw("class")) return classdef(begin, std::move(decorators));
    if (at_kw("async")) return async_stmt(begin, std::move(decorators));
    throw ParseFailure{};
  }

  PNode funcdef(std::size_t begin, std::vector<PNode> decorators, bool async) {
    expect_kw("def");
    const Token& name = expect(TokenKind::identifier);
    PNode n = make(async ? "AsyncFunctionDef" : "FunctionDef", begin, name.text);
    n.anchor = name.begin;
    for (auto& d : decorators) n.children.push_back(std::move(d));
    n.children.push_back(parameters());
    if (accept_sym("->")) n.children.push_back(test());
    suite(n);
    return finish(std::move(n));
  }

  PNode classdef(std::size_t begin, std::vector<PNode> decorators) {
    expect_kw("class");
    const Token& name = expect(TokenKind::identifier);
    PNode n = make("ClassDef", begin, name.text);
    n.anchor = name.begin;
    for (auto& d : decorators) n.children.push_back(std::move(d));
    if (accept_sym("(")) {
      arglist_into(n, ")");
      expect_sym(")");
    }
    suite(n);
    return finish(std::move(n));
  }

  // `(a, b: int = 1, *args, key=None, **kw)` -> arguments node spanning the
  // parentheses.
  PNode parameters() {
    PNode args = make("arguments", expect_sym("(").begin);
    param_list(args, ")");
    expect_sym(")");
    return finish(std::move(args));
  }

  void param_list(PNode& args, std::string_view closer) {
    bool annotations = closer == ")";
    while (!at_sym(closer)) {
      if (accept_sym("/")) {
      } else if (at_sym("*") || at_sym("**")) {
        const Token& star = take();
        if (at(TokenKind::identifier)) {
          PNode a = leaf(star.text == "*" ? "vararg" : "kwarg", cur(), cur().text);
          a.begin = star.begin;
          take();
          if (annotations && accept_sym(":")) a.children.push_back(test());
          args.children.push_back(finish(std::move(a)));
        }
      } else {
        const Token& name = expect(TokenKind::identifier);
        PNode a = leaf("arg", name, name.text);
        if (annotations && accept_sym(":")) a.children.push_back(test());
        if (accept_sym("=")) a.children.push_back(test());
        args.children.push_back(finish(std::move(a)));
      }
      if (!accept_sym(",")) break;
    }
  }

  // ---- expressions ---------------------------------------------------

  PNode testlist_star_expr() {
    std::size_t begin = cur().begin;
    PNode first = at_sym("*") ? star_expr() : namedexpr_test();
    if (!at_sym(",")) return first;
    PNode tup = make("Tuple", begin);
    tup.children.push_back(std::move(first));
    while (accept_sym(",")) {
      if (!starts_expression()) break;
      tup.children.push_back(at_sym("*") ? star_expr() : namedexpr_test());
    }
    return finish(std::move(tup));
  }

  PNode testlist() {
    std::size_t begin = cur().begin;
    PNode first = test();
    if (!at_sym(",")) return first;
    PNode tup = make("Tuple", begin);
    tup.children.push_back(std::move(first));
    while (accept_sym(",")) {
      if (!starts_expression()) break;
      tup.children.push_back(test());
    }
    return finish(std::move(tup));
  }

  PNode exprlist() {
    std::size_t begin = cur().begin;
    PNode first = at_sym("*") ? star_expr() : expr();
    if (!at_sym(",")) return first;
    PNode tup = make("Tuple", begin);
    tup.children.push_back(std::move(first));
    while (accept_sym(",")) {
      if (!starts_expression()) break;
      tup.children.push_back(at_sym("*") ? star_expr() : expr());
    }
    return finish(std::move(tup));
  }

  PNode star_expr() {
    PNode n = make("Starred", expect_sym("*").begin);
    n.children.push_back(expr());
    return finish(std::move(n));
  }

  PNode yield_expr() {
    std::size_t begin = expect_kw("yield").begin;
    if (accept_kw("from")) {
      PNode n = make("YieldFrom", begin);
      n.children.push_back(test());
      return finish(std::move(n));
    }
    PNode n = make("Yield", begin);
    if (starts_expression()) n.children.push_back(testlist_star_expr());
    return finish(std::move(n));
  }

  PNode namedexpr_test() {
    std::size_t begin = cur().begin;
    PNode t = test();
    if (!at_sym(":=")) return t;
    take();
    PNode n = make("NamedExpr", begin);
    n.children.push_back(std::move(t));
    n.children.push_back(test());
    return finish(std::move(n));
  }

  PNode test() {
    if (at_kw("lambda")) return lambdef();
    std::size_t begin = cur().begin;
    PNode body = or_test();
    if (!at_kw("if")) return body;
    // Conditional expression; `else` is mandatory here.
    take();
    PNode n = make("IfExp", begin);
    PNode cond = or_test();
    expect_kw("else");
    n.children.push_back(std::move(cond));
    n.children.push_back(std::move(body));
    n.children.push_back(test());
    return finish(std::move(n));
  }

  PNode lambdef() {
    PNode n = make("Lambda", expect_kw("lambda").begin);
    PNode args = make("arguments", cur().begin);
    param_list(args, ":");
    n.children.push_back(finish(std::move(args)));
    expect_sym(":");
    n.children.push_back(test());
    return finish(std::move(n));
  }

  PNode or_test() { return bool_chain("or", "Or", [this] { return and_test(); }); }
  PNode and_test() { return bool_chain("and", "And", [this] { return not_test(); }); }

  template <typename Next>
  PNode bool_chain(std::string_view kw, std::string_view kind, Next next) {
    std::size_t begin = cur().begin;
    PNode first = next();
    if (!at_kw(kw)) return first;
    PNode n = make("BoolOp", begin);
    n.children.push_back(leaf(std::string(kind), cur()));
    n.children.push_back(std::move(first));
    while (accept_kw(kw)) n.children.push_back(next());
    return finish(std::move(n));
  }

  PNode not_test() {
    if (at_kw("not")) {
      const Token& t = take();
      PNode n = make("UnaryOp", t.begin);
      n.children.push_back(leaf("Not", t));
      n.children.push_back(not_test());
      return finish(std::move(n));
    }
    return comparison();
  }

  std::string comp_op() {
    const Token& t = cur();
    if (t.kind == TokenKind::op) {
      if (t.text == "<") return "Lt";
      if (t.text == ">") return "Gt";
      if (t.text == "==") return "Eq";
      if (t.text == ">=") return "GtE";
      if (t.text == "<=") return "LtE";
      if (t.text == "!=") return "NotEq";
    }
    if (t.kind == TokenKind::keyword) {
      if (t.text == "in") return "In";
      if (t.text == "is") return ahead(1).kind == TokenKind::keyword && ahead(1).text == "not" ? "IsNot" : "Is";
      if (t.text == "not" && ahead(1).kind == TokenKind::keyword && ahead(1).text == "in") return "NotIn";
    }
    return {};
  }

  PNode comparison() {
    std::size_t begin = cur().begin;
    PNode first = expr();
    std::string op = comp_op();
    if (op.empty()) return first;
    PNode n = make("Compare", begin);
    n.children.push_back(std::move(first));
    while (!(op = comp_op()).empty()) {
      const Token& t = take();
      if (op == "IsNot" || op == "NotIn") take();
      n.children.push_back(leaf(op, t));
      n.children.push_back(expr());
    }
    return finish(std::move(n));
  }

  template <typename Next>
  PNode binary_level(std::initializer_list<std::string_view> ops, Next next) {
    std::size_t begin = cur().begin;
    PNode left = next();
    while (true) {
      bool matched = false;
      for (auto o : ops) {
        if (cur().kind == TokenKind::op && cur().text == o) {
          matched = true;
          break;
        }
      }
      if (!matched) return left;
      const Token& op = take();
      PNode n = make("BinOp", begin);
      n.children.push_back(std::move(left));
      n.children.push_back(leaf(binop_kind(op.text), op));
      n.children.push_back(next());
      left = finish(std::move(n));
    }
  }

  PNode expr() { return binary_level({"|"}, [this] { return xor_expr(); }); }
  PNode xor_expr() { return binary_level({"^"}, [this] { return and_expr(); }); }
  PNode and_expr() { return binary_level({"&"}, [this] { return shift_expr(); }); }
  PNode shift_expr() { return binary_level({"<<", ">>"}, [this] { return arith_expr(); }); }
  PNode arith_expr() { return binary_level({"+", "-"}, [this] { return term(); }); }
  PNode term() { return binary_level({"*", "@", "/", "%", "//"}, [this] { return factor(); }); }

  PNode factor() {
    if (cur().kind == TokenKind::op && (cur().text == "+" || cur().text == "-" || cur().text == "~")) {
      const Token& t = take();
      PNode n = make("UnaryOp", t.begin);
      n.children.push_back(leaf(t.text == "+" ? "UAdd" : t.text == "-" ? "USub" : "Invert", t));
      n.children.push_back(factor());
      return finish(std::move(n));
    }
    return power();
  }

  PNode power() {
    std::size_t begin = cur().begin;
    PNode base;
    if (at_kw("await")) {
      take();
      base = make("Await", begin);
      base.children.push_back(atom_with_trailers());
      base = finish(std::move(base));
    } else {
      base = atom_with_trailers();
    }
    if (cur().kind == TokenKind::op && cur().text == "**") {
      const Token& op = take();
      PNode n = make("BinOp", begin);
      n.children.push_back(std::move(base));
      n.children.push_back(leaf("Pow", op));
      n.children.push_back(factor());
      return finish(std::move(n));
    }
    return base;
  }

  PNode atom_with_trailers() {
    std::size_t begin = cur().begin;
    PNode node = atom();
    while (true) {
      if (at_sym("(")) {
        take();
        PNode call = make("Call", begin);
        call.anchor = node.anchor;
        call.children.push_back(std::move(node));
        arglist_into(call, ")");
        expect_sym(")");
        node = finish(std::move(call));
      } else if (at_sym("[")) {
        take();
        PNode sub = make("Subscript", begin);
        sub.children.push_back(std::move(node));
        sub.children.push_back(subscriptlist());
        expect_sym("]");
        node = finish(std::move(sub));
      } else if (at_sym(".") && ahead(1).kind == TokenKind::identifier) {
        take();
        const Token& name = take();
        PNode attr = make("Attribute", begin, name.text);
        attr.anchor = name.begin;
        attr.children.push_back(std::move(node));
        node = finish(std::move(attr));
      } else {
        return node;
      }
    }
  }

  void arglist_into(PNode& call, std::string_view closer) {
    while (!at_sym(closer)) {
      if (at_sym("*")) {
        call.children.push_back(star_expr());
      } else if (at_sym("**")) {
        PNode kw = make("keyword", take().begin);
        kw.children.push_back(test());
        call.children.push_back(finish(std::move(kw)));
      } else if (at(TokenKind::identifier) && ahead(1).kind == TokenKind::op && ahead(1).text == "=") {
        const Token& name = take();
        PNode kw = make("keyword", name.begin, name.text);
        take();
        kw.children.push_back(test());
        call.children.push_back(finish(std::move(kw)));
      } else {
        std::size_t begin = cur().begin;
        PNode value = namedexpr_test();
        if (at_kw("for") || at_kw("async")) {
          PNode gen = make("GeneratorExp", begin);
          gen.children.push_back(std::move(value));
          comprehensions(gen);
          value = finish(std::move(gen));
        }
        call.children.push_back(std::move(value));
      }
      if (!accept_sym(",")) break;
    }
  }

  PNode subscriptlist() {
    std::size_t begin = cur().begin;
    PNode first = subscript();
    if (!at_sym(",")) return first;
    PNode tup = make("Tuple", begin);
    tup.children.push_back(std::move(first));
    while (accept_sym(",")) {
      if (at_sym("]")) break;
      tup.children.push_back(subscript());
    }
    return finish(std::move(tup));
  }

  PNode subscript() {
    std::size_t begin = cur().begin;
    PNode lower;
    bool has_lower = false;
    if (!at_sym(":")) {
      lower = at_sym("*") ? star_expr() : test();
      has_lower = true;
      if (!at_sym(":")) return lower;
    }
    PNode slice = make("Slice", begin);
    if (has_lower) slice.children.push_back(std::move(lower));
    expect_sym(":");
    if (!at_sym(":") && !at_sym("]") && !at_sym(",")) slice.children.push_back(test());
    if (accept_sym(":")) {
      if (!at_sym("]") && !at_sym(",")) slice.children.push_back(test());
    }
    return finish(std::move(slice));
  }

  void comprehensions(PNode& owner) {
    while (at_kw("for") || at_kw("async")) {
      PNode comp = make("comprehension", cur().begin);
      accept_kw("async");
      expect_kw("for");
      comp.children.push_back(exprlist());
      expect_kw("in");
      comp.children.push_back(or_test());
      while (at_kw("if")) {
        take();
        comp.children.push_back(or_test());
      }
      owner.children.push_back(finish(std::move(comp)));
    }
  }

  PNode atom() {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::identifier: {
        take();
        return leaf("Name", t, t.text);
      }
      case TokenKind::number: {
        take();
        return leaf("Constant", t, t.text);
      }
      case TokenKind::string:
        return strings();
      case TokenKind::keyword:
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          take();
          return leaf("Constant", t, t.text);
        }
        throw ParseFailure{};
      default:
        break;
    }
    if (at_sym("...")) return leaf("Constant", take(), "...");
    if (at_sym("(")) return paren_atom();
    if (at_sym("[")) return list_atom();
    if (at_sym("{")) return brace_atom();
    throw ParseFailure{};
  }

  PNode strings() {
    std::size_t begin = cur().begin;
    std::string value;
    bool formatted = false;
    while (at(TokenKind::string)) {
      const Token& s = take();
      for (char c : s.text) {
        if (c == '\'' || c == '"') break;
        if (c == 'f' || c == 'F') formatted = true;
      }
      value += decode_string_literal(s.text);
    }
    PNode n = make(formatted ? "JoinedStr" : "Constant", begin, std::move(value));
    return finish(std::move(n));
  }

  PNode paren_atom() {
    std::size_t begin = take().begin;
    if (accept_sym(")")) {
      PNode n = make("Tuple", begin);
      return finish(std::move(n));
    }
    if (at_kw("yield")) {
      PNode y = yield_expr();
      expect_sym(")");
      return y;
    }
    PNode first = at_sym("*") ? star_expr() : namedexpr_test();
    if (at_kw("for") || at_kw("async")) {
      PNode gen = make("GeneratorExp", begin);
      gen.children.push_back(std::move(first));
      comprehensions(gen);
      expect_sym(")");
      return finish(std::move(gen));
    }
    if (at_sym(",")) {
      PNode tup = make("Tuple", begin);
      tup.children.push_back(std::move(first));
      while (accept_sym(",")) {
        if (at_sym(")")) break;
        tup.children.push_back(at_sym("*") ? star_expr() : namedexpr_test());
      }
      expect_sym(")");
      return finish(std::move(tup));
    }
    expect_sym(")");
    return first;
  }

  PNode list_atom() {
    std::size_t begin = take().begin;
    PNode list = make("List", begin);
    if (accept_sym("]")) return finish(std::move(list));
    PNode first = at_sym("*") ? star_expr() : namedexpr_test();
    if (at_kw("for") || at_kw("async")) {
      PNode comp = make("ListComp", begin);
      comp.children.push_back(std::move(first));
      comprehensions(comp);
      expect_sym("]");
      return finish(std::move(comp));
    }
    list.children.push_back(std::move(first));
    while (accept_sym(",")) {
      if (at_sym("]")) break;
      list.children.push_back(at_sym("*") ? star_expr() : namedexpr_test());
    }
    expect_sym("]");
    return finish(std::move(list));
  }

  PNode brace_atom() {
    std::size_t begin = take().begin;
    if (accept_sym("}")) return finish(make("Dict", begin));
    if (at_sym("**")) {
      PNode dict = make("Dict", begin);
      dict_items(dict);
      expect_sym("}");
      return finish(std::move(dict));
    }
    PNode first = at_sym("*") ? star_expr() : test();
    if (accept_sym(":")) {
      PNode value = test();
      if (at_kw("for") || at_kw("async")) {
        PNode comp = make("DictComp", begin);
        comp.children.push_back(std::move(first));
        comp.children.push_back(std::move(value));
        comprehensions(comp);
        expect_sym("}");
        return finish(std::move(comp));
      }
      PNode dict = make("Dict", begin);
      dict.children.push_back(std::move(first));
      dict.children.push_back(std::move(value));
      if (accept_sym(",")) dict_items(dict);
      expect_sym("}");
      return finish(std::move(dict));
    }
    if (at_kw("for") || at_kw("async")) {
      PNode comp = make("SetComp", begin);
      comp.children.push_back(std::move(first));
      comprehensions(comp);
      expect_sym("}");
      return finish(std::move(comp));
    }
    PNode set = make("Set", begin);
    set.children.push_back(std::move(first));
    while (accept_sym(",")) {
      if (at_sym("}")) break;
      set.children.push_back(at_sym("*") ? star_expr() : test());
    }
    expect_sym("}");
    return finish(std::move(set));
  }

  void dict_items(PNode& dict) {
    while (!at_sym("}")) {
      if (accept_sym("**")) {
        dict.children.push_back(expr());
      } else {
        dict.children.push_back(test());
        expect_sym(":");
        dict.children.push_back(test());
      }
      if (!accept_sym(",")) break;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t last_end_ = 0;
  std::vector<PNode> pending_;
};

void flatten(SyntaxTree& tree, std::size_t parent, PNode&& node) {
  std::size_t id = tree.add(parent, std::move(node.kind), std::move(node.text));
  auto& n = tree.node(id);
  n.begin = node.begin;
  n.end = node.end;
  n.anchor = node.anchor;
  for (auto& c : node.children) flatten(tree, id, std::move(c));
}

}  // namespace

SyntaxTree::SyntaxTree() : SyntaxTree("Module") {}

SyntaxTree::SyntaxTree(std::string root_kind) {
  nodes_.push_back(SyntaxNode{std::move(root_kind), {}, 0, 0, 0, {}});
}

std::size_t SyntaxTree::add(std::size_t parent, std::string kind, std::string text) {
  std::size_t id = nodes_.size();
  nodes_.push_back(SyntaxNode{std::move(kind), std::move(text), 0, 0, 0, {}});
  nodes_.at(parent).children.push_back(id);
  return id;
}

std::size_t SyntaxTree::count_kind(std::string_view kind) const {
  std::size_t count = 0;
  for (const auto& n : nodes_)
    if (n.kind == kind) ++count;
  return count;
}

std::string SyntaxTree::shape(std::size_t id) const {
  const auto& n = nodes_.at(id);
  std::string out = "(" + n.kind;
  for (auto c : n.children) out += " " + shape(c);
  out += ")";
  return out;
}

SyntaxTree parse(std::string_view source) {
  try {
    auto lexed = lex(source);
    Parser parser(std::move(lexed.tokens));
    PNode root = parser.module(source.size());
    SyntaxTree tree;
    tree.node(0).end = source.size();
    for (auto& c : root.children) flatten(tree, SyntaxTree::root(), std::move(c));
    return tree;
  } catch (...) {
    SyntaxTree err{std::string(kErrorKind)};
    err.node(0).end = source.size();
    return err;
  }
}

}  // namespace manimeval::python
