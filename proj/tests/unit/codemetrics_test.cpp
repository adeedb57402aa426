#include "manimeval/codemetrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "manimeval/error.hpp"
#include "oracles.hpp"

namespace cm = manimeval::codemetrics;
using manimeval::python::SyntaxTree;

namespace {

SyntaxTree random_tree(std::mt19937& rng, int max_nodes, int alphabet) {
  std::uniform_int_distribution<int> size_dist(1, max_nodes);
  std::uniform_int_distribution<int> label(0, alphabet - 1);
  const int n = size_dist(rng);
  SyntaxTree tree(std::string(1, static_cast<char>('A' + label(rng))));
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> parent(0, k - 1);
    tree.add(static_cast<std::size_t>(parent(rng)), std::string(1, static_cast<char>('A' + label(rng))));
  }
  return tree;
}

// Reference subtree match by shape strings and a multiset of generated shapes.
double syntax_match_oracle(const SyntaxTree& gen, const SyntaxTree& ref) {
  if (ref.size() == 1) {
    return gen.count_kind(ref.node(0).kind) > 0 ? 1.0 : 0.0;
  }
  std::map<std::string, int> pool;
  for (std::size_t i = 0; i < gen.size(); ++i) ++pool[gen.shape(i)];
  int hit = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    auto it = pool.find(ref.shape(i));
    if (it != pool.end() && it->second > 0) {
      --it->second;
      ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(ref.size());
}

}  // namespace

TEST(Tokenize, ClassesFromLexer) {
  auto toks = cm::tokenize_code("def f(x):\n    return x + 1  # c\n");
  ASSERT_EQ(toks.size(), 10u);
  EXPECT_EQ(toks[0], (cm::CodeToken{"def", cm::TokenClass::keyword}));
  EXPECT_EQ(toks[1], (cm::CodeToken{"f", cm::TokenClass::identifier}));
  EXPECT_EQ(toks[2].cls, cm::TokenClass::punctuation);
  EXPECT_EQ(toks[8], (cm::CodeToken{"+", cm::TokenClass::op}));
  EXPECT_EQ(toks[9], (cm::CodeToken{"1", cm::TokenClass::number}));
}

TEST(Tokenize, FallsBackOnLexFailure) {
  auto toks = cm::tokenize_code("x = 'oops\ny(z)");
  ASSERT_FALSE(toks.empty());
  for (const auto& t : toks) EXPECT_EQ(t.cls, cm::TokenClass::other);
  EXPECT_EQ(toks.front().text, "x");
  EXPECT_EQ(toks.back().text, ")");
}

TEST(NgramMatch, Identical) {
  auto t = cm::tokenize_code("self.play(Create(Circle()))");
  EXPECT_DOUBLE_EQ(cm::ngram_match(t, t), 1.0);
}

TEST(NgramMatch, EmptyConventions) {
  auto t = cm::make_tokens({"a"});
  EXPECT_EQ(cm::ngram_match({}, {}), 1.0);
  EXPECT_EQ(cm::ngram_match(t, {}), 0.0);
  EXPECT_EQ(cm::ngram_match({}, t), 0.0);
}

TEST(NgramMatch, SmoothedZeroPrecision) {
  // p1 = 2/3, p2 = 1/2, p3 = 0 -> eps; cube root of the product.
  double v = cm::ngram_match(cm::make_tokens({"a", "b", "c"}), cm::make_tokens({"a", "b", "d"}));
  EXPECT_NEAR(v, 0.0006933612743506347, 1e-15);
}

TEST(NgramMatch, BrevityPenalty) {
  // Unigram-only: p1 = 1, BP = exp(1 - 4/2).
  double v = cm::ngram_match(cm::make_tokens({"a", "b"}), cm::make_tokens({"a", "b", "c", "d"}), 1);
  EXPECT_NEAR(v, std::exp(-1.0), 1e-15);
  // Longer generation has no penalty: p1 = 2/4.
  double w = cm::ngram_match(cm::make_tokens({"a", "b", "x", "y"}), cm::make_tokens({"a", "b"}), 1);
  EXPECT_NEAR(w, 0.5, 1e-15);
}

TEST(NgramMatch, ClippedCounts) {
  double v = cm::ngram_match(cm::make_tokens({"a", "a", "a"}), cm::make_tokens({"a", "b", "c"}), 1);
  EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(WeightedNgramMatch, WeightOneEqualsPlain) {
  std::mt19937 rng(7);
  const char* words[] = {"def", "x", "return", "(", ")", "y", "for", "in"};
  std::uniform_int_distribution<int> pick(0, 7), len(0, 12);
  for (int trial = 0; trial < 300; ++trial) {
    std::string a, b;
    for (int k = len(rng); k > 0; --k) (a += words[pick(rng)]) += ' ';
    for (int k = len(rng); k > 0; --k) (b += words[pick(rng)]) += ' ';
    auto ta = cm::tokenize_code(a);
    auto tb = cm::tokenize_code(b);
    EXPECT_DOUBLE_EQ(cm::weighted_ngram_match(ta, tb, 4, 1.0), cm::ngram_match(ta, tb)) << a << "|" << b;
  }
}

TEST(WeightedNgramMatch, KeywordsCountMore) {
  auto gen = cm::tokenize_code("return y");
  auto ref = cm::tokenize_code("return x");
  // Unigrams only: plain 1/2; weighted (5 + 0) / (5 + 1).
  EXPECT_NEAR(cm::ngram_match(gen, ref, 1), 0.5, 1e-15);
  EXPECT_NEAR(cm::weighted_ngram_match(gen, ref, 1, 5.0), 5.0 / 6.0, 1e-15);
  std::unordered_set<std::string> extra{"y"};
  EXPECT_NEAR(cm::weighted_ngram_match(cm::tokenize_code("y"), cm::tokenize_code("y z"), 1, 5.0, &extra),
              std::exp(1.0 - 2.0), 1e-15);
}

TEST(WeightedNgramMatch, RejectsWeightBelowOne) {
  auto t = cm::make_tokens({"a"});
  EXPECT_THROW(cm::weighted_ngram_match(t, t, 4, 0.5), manimeval::ContractViolation);
}

TEST(SyntaxMatch, HandBuiltPair) {
  SyntaxTree ref("X");
  auto y = ref.add(0, "Y");
  ref.add(y, "Z");
  ref.add(0, "W");
  ref.add(0, "V");
  SyntaxTree gen("Q");
  auto y2 = gen.add(0, "Y");
  gen.add(y2, "Z");
  gen.add(0, "W");
  // Y(Z), Z, W found; X(...) and V not.
  EXPECT_NEAR(cm::syntax_match(gen, ref), 0.6, 1e-15);
  EXPECT_NEAR(syntax_match_oracle(gen, ref), 0.6, 1e-15);
}

TEST(SyntaxMatch, SingleNodeReference) {
  SyntaxTree ref("Name");
  SyntaxTree gen("Module");
  EXPECT_EQ(cm::syntax_match(gen, ref), 0.0);
  gen.add(0, "Name");
  EXPECT_EQ(cm::syntax_match(gen, ref), 1.0);
}

TEST(SyntaxMatch, AgreesWithShapeOracleOnRandomTrees) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    auto a = random_tree(rng, 9, 3);
    auto b = random_tree(rng, 9, 3);
    EXPECT_DOUBLE_EQ(cm::syntax_match(a, b), syntax_match_oracle(a, b));
  }
}

TEST(SyntaxMatch, IdenticalCodeScoresOne) {
  auto t = cm::parse_syntax("class A(Scene):\n    def construct(self):\n        self.wait(1)\n");
  EXPECT_EQ(cm::syntax_match(t, t), 1.0);
}

TEST(TreeEdit, MatchesExhaustiveSearch) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = random_tree(rng, 6, 3);
    auto b = random_tree(rng, 6, 3);
    EXPECT_EQ(cm::tree_edit_distance(a, b), oracle::tree_edit_enumerate(a, b))
        << a.shape(0) << " vs " << b.shape(0);
  }
}

TEST(TreeEdit, KnownDistances) {
  SyntaxTree a("A");
  a.add(0, "B");
  a.add(0, "C");
  SyntaxTree b("A");
  auto c = b.add(0, "C");
  b.add(c, "B");
  // Delete B then insert B under C.
  EXPECT_EQ(cm::tree_edit_distance(a, b), 2u);
  EXPECT_EQ(cm::tree_edit_distance(a, a), 0u);
}

TEST(AstDistance, Normalisation) {
  auto ref = cm::parse_syntax("x = 1\n");
  auto empty = cm::parse_syntax("");
  // Empty module keeps the root; the other three nodes are inserted.
  EXPECT_NEAR(cm::ast_distance(empty, ref), 3.0 / 5.0, 1e-15);
  EXPECT_EQ(cm::ast_distance(ref, ref), 0.0);
}

TEST(CodeBleu, WeightedSum) {
  EXPECT_NEAR(cm::codebleu(0.6, 0.3, 0.9), 0.6, 1e-15);
  EXPECT_NEAR(cm::codebleu(1, 0, 0, {0.5, 0.25, 0.25}), 0.5, 1e-15);
  EXPECT_THROW(cm::codebleu(1, 1, 1, {0.5, 0.5, 0.5}), manimeval::ConfigError);
}

TEST(TextReward, GeometricMean) {
  EXPECT_NEAR(cm::text_reward(0.64, 0.25), 0.4, 1e-15);
  EXPECT_EQ(cm::text_reward(0.0, 1.0), 0.0);
}

TEST(HashingEmbedder, DeterministicAndSized) {
  cm::HashingCodeEmbedder emb(64);
  std::vector<std::string> in{"a = 1", "a = 1", "b = Circle()"};
  auto out = emb.embed(in);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].size(), 64u);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_NE(out[0], out[2]);
}

TEST(CodebertSimilarity, RangeAndIdentity) {
  cm::HashingCodeEmbedder emb;
  EXPECT_EQ(cm::codebert_similarity("x = 1", "x = 1", emb), 1.0);
  double s = cm::codebert_similarity("x = 1", "self.play(Write(t))", emb);
  EXPECT_GE(s, 0.0);
  EXPECT_LT(s, 1.0);
}

namespace {
class OppositeEmbedder : public cm::CodeEmbedder {
 public:
  std::vector<cm::EmbeddingVector> embed(std::span<const std::string> inputs) override {
    std::vector<cm::EmbeddingVector> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) out.push_back({i == 0 ? 1.0 : -1.0, 0.0});
    return out;
  }
};
}  // namespace

TEST(CodebertSimilarity, ClampsNegativeCosine) {
  OppositeEmbedder emb;
  EXPECT_EQ(cm::codebert_similarity("a", "b", emb), 0.0);
}

TEST(ScoreCode, IdenticalCodeIsPerfect) {
  const char* code = "from manim import *\n\nclass A(Scene):\n    def construct(self):\n        self.play(FadeIn(Square()))\n";
  cm::HashingCodeEmbedder emb;
  auto s = cm::score_code(code, code, emb);
  EXPECT_NEAR(s.codebleu, 1.0, 1e-12);
  EXPECT_NEAR(s.text_reward, 1.0, 1e-12);
  EXPECT_EQ(s.ast_distance, 0.0);
}
