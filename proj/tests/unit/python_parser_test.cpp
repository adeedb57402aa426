#include <gtest/gtest.h>

#include "manimeval/python/lexer.hpp"
#include "manimeval/python/parser.hpp"

namespace py = manimeval::python;

namespace {

std::vector<std::string> kinds_of(const py::LexResult& r) {
  std::vector<std::string> out;
  for (const auto& t : r.tokens) {
    switch (t.kind) {
      case py::TokenKind::newline: out.push_back("NL"); break;
      case py::TokenKind::indent: out.push_back("IN"); break;
      case py::TokenKind::dedent: out.push_back("DE"); break;
      case py::TokenKind::end: out.push_back("END"); break;
      default: out.push_back(t.text);
    }
  }
  return out;
}

constexpr const char* kScene = R"(from manim import *


class Demo(Scene):
    """A docstring."""

    def construct(self):
        c = Circle(radius=2, color=BLUE)  # comment
        self.play(Create(c), run_time=0.5)
        labels = [Text(str(i)) for i in range(3) if i != 1]
        self.wait()
)";

}  // namespace

TEST(Lexer, LayoutTokens) {
  auto r = py::lex("if x:\n    y = 1\nz\n");
  ASSERT_TRUE(r.ok());
  std::vector<std::string> expected = {"if", "x", ":", "NL", "IN", "y", "=", "1", "NL", "DE", "z", "NL", "END"};
  EXPECT_EQ(kinds_of(r), expected);
}

TEST(Lexer, ImplicitLineJoiningInsideBrackets) {
  auto r = py::lex("f(a,\n  b)\n");
  ASSERT_TRUE(r.ok());
  std::vector<std::string> expected = {"f", "(", "a", ",", "b", ")", "NL", "END"};
  EXPECT_EQ(kinds_of(r), expected);
}

TEST(Lexer, StringsNumbersAndOperators) {
  auto r = py::lex("x = rb'a\\'b' + 0x1F * 1.5e-3j // ...\n");
  ASSERT_TRUE(r.ok());
  ASSERT_GE(r.tokens.size(), 9u);
  EXPECT_EQ(r.tokens[2].kind, py::TokenKind::string);
  EXPECT_EQ(r.tokens[2].text, "rb'a\\'b'");
  EXPECT_EQ(r.tokens[4].kind, py::TokenKind::number);
  EXPECT_EQ(r.tokens[6].text, "1.5e-3j");
  EXPECT_EQ(r.tokens[7].text, "//");
  EXPECT_EQ(r.tokens[8].kind, py::TokenKind::punct);
}

TEST(Lexer, TripleQuotedSpansLines) {
  auto r = py::lex("s = \"\"\"a\nb\"\"\"\nt = 1\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(py::decode_string_literal(r.tokens[2].text), "a\nb");
  EXPECT_EQ(r.tokens[4].line, 3);
}

TEST(Lexer, ReportsErrors) {
  EXPECT_FALSE(py::lex("x = 'unterminated\n").ok());
  EXPECT_FALSE(py::lex("a $ b\n").ok());
  EXPECT_FALSE(py::lex("if x:\n        a\n    b\n").ok());
}

TEST(Parser, SmallestStatement) {
  auto tree = py::parse("x = 1");
  EXPECT_EQ(tree.shape(0), "(Module (Assign (Name) (Constant)))");
}

TEST(Parser, EmptyModule) {
  auto tree = py::parse("");
  EXPECT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.node(0).kind, "Module");
  EXPECT_TRUE(tree.node(0).children.empty());
}

TEST(Parser, IncompleteDefinitionYieldsErrorNode) {
  auto tree = py::parse("def f(");
  EXPECT_GE(tree.count_kind(py::kErrorKind), 1u);
  EXPECT_EQ(tree.node(0).kind, "Module");
}

TEST(Parser, ErrorRecoveryResumesAtNextStatement) {
  auto tree = py::parse("a = (\nb = 1\n");
  // Unbalanced bracket swallows the rest of the file into one logical line.
  EXPECT_EQ(tree.count_kind(py::kErrorKind), 1u);
  auto tree2 = py::parse("x = = 2\ny = 3\n");
  EXPECT_EQ(tree2.count_kind(py::kErrorKind), 1u);
  EXPECT_EQ(tree2.count_kind("Assign"), 1u);
}

TEST(Parser, ErrorNodeKeepsIndentedBlock) {
  auto tree = py::parse("if x\n    y = 1\nz = 2\n");
  ASSERT_EQ(tree.node(0).children.size(), 2u);
  const auto& err = tree.node(tree.node(0).children[0]);
  EXPECT_EQ(err.kind, py::kErrorKind);
  EXPECT_EQ(tree.count_kind("Assign"), 2u);
}

TEST(Parser, SceneStructure) {
  auto tree = py::parse(kScene);
  EXPECT_EQ(tree.count_kind(py::kErrorKind), 0u);
  EXPECT_EQ(tree.count_kind("ImportFrom"), 1u);
  EXPECT_EQ(tree.count_kind("ClassDef"), 1u);
  EXPECT_EQ(tree.count_kind("FunctionDef"), 1u);
  EXPECT_EQ(tree.count_kind("ListComp"), 1u);
  EXPECT_EQ(tree.count_kind("keyword"), 3u);
  EXPECT_EQ(tree.count_kind("Call"), 7u);
  const auto& cls = tree.node(tree.node(0).children[1]);
  EXPECT_EQ(cls.text, "Demo");
}

TEST(Parser, ExpressionPrecedence) {
  auto tree = py::parse("a + b * c ** -d\n");
  EXPECT_EQ(tree.shape(0),
            "(Module (Expr (BinOp (Name) (Add) (BinOp (Name) (Mult) (BinOp (Name) (Pow) "
            "(UnaryOp (USub) (Name)))))))");
}

TEST(Parser, ComparisonsAndBooleans) {
  auto tree = py::parse("x = a is not b and not c in d\n");
  EXPECT_EQ(tree.shape(0),
            "(Module (Assign (Name) (BoolOp (And) (Compare (Name) (IsNot) (Name)) (UnaryOp (Not) "
            "(Compare (Name) (In) (Name))))))");
}

TEST(Parser, CompoundStatements) {
  const char* src = R"(@decorator
async def f(a, b: int = 2, *args, c=None, **kw) -> str:
    try:
        with open(a) as fh, lock:
            pass
    except (IOError, OSError) as e:
        raise ValueError() from e
    else:
        return {k: v for k, v in kw.items()}
    finally:
        del a
    while True:
        break
    for i, x in enumerate(args):
        continue
    lam = lambda y, *z: y[1:2, ::3]
    yield from g
)";
  auto tree = py::parse(src);
  EXPECT_EQ(tree.count_kind(py::kErrorKind), 0u) << tree.shape(0);
  EXPECT_EQ(tree.count_kind("AsyncFunctionDef"), 1u);
  EXPECT_EQ(tree.count_kind("Try"), 1u);
  EXPECT_EQ(tree.count_kind("ExceptHandler"), 1u);
  EXPECT_EQ(tree.count_kind("withitem"), 2u);
  EXPECT_EQ(tree.count_kind("DictComp"), 1u);
  EXPECT_EQ(tree.count_kind("Slice"), 2u);
  EXPECT_EQ(tree.count_kind("YieldFrom"), 1u);
  EXPECT_EQ(tree.count_kind("Lambda"), 1u);
  EXPECT_EQ(tree.count_kind("arg"), 4u);
}

TEST(Parser, ParenthesizedWithItems) {
  auto grouped = py::parse("with (\n    open(a) as x,\n    open(b) as y,\n):\n    pass\n");
  EXPECT_EQ(grouped.count_kind(py::kErrorKind), 0u) << grouped.shape(0);
  EXPECT_EQ(grouped.count_kind("withitem"), 2u);
  // Parentheses that are just an expression still parse as one item.
  auto tuple_like = py::parse("with (a, b)[0] as z:\n    pass\n");
  EXPECT_EQ(tuple_like.count_kind(py::kErrorKind), 0u) << tuple_like.shape(0);
  EXPECT_EQ(tuple_like.count_kind("withitem"), 1u);
  EXPECT_EQ(tuple_like.count_kind("Subscript"), 1u);
  auto plain = py::parse("with (lock):\n    pass\n");
  EXPECT_EQ(plain.count_kind("withitem"), 1u);
}

TEST(Parser, SemicolonSeparatedStatementsAreSiblings) {
  auto tree = py::parse("a = 1; b = 2\n");
  EXPECT_EQ(tree.node(0).children.size(), 2u);
}

TEST(Parser, AttributeAnchorsPointAtName) {
  std::string src = "self.play(x)\n";
  auto tree = py::parse(src);
  bool found = false;
  for (const auto& n : tree.nodes()) {
    if (n.kind == "Attribute") {
      EXPECT_EQ(n.text, "play");
      EXPECT_EQ(src.substr(n.anchor, 4), "play");
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Parser, NeverThrowsOnGarbage) {
  for (const char* src : {")))", "\t\t\tx", "class", "def", "@", "lambda", "[1, 2", "'''", "x = [\n"}) {
    auto tree = py::parse(src);
    EXPECT_GE(tree.size(), 1u);
  }
}
