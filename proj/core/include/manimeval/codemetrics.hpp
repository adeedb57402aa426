#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "manimeval/python/syntax_tree.hpp"

namespace manimeval::codemetrics {

enum class TokenClass { keyword, identifier, number, string, op, punctuation, other };

std::string_view to_string(TokenClass cls);

struct CodeToken {
  std::string text;
  TokenClass cls = TokenClass::other;

  friend bool operator==(const CodeToken&, const CodeToken&) = default;
};

using TokenSequence = std::vector<CodeToken>;

/// Lexical tokens of Python source with layout tokens and comments removed.
/// When the source does not lex cleanly the whole input is re-split on
/// whitespace and punctuation instead, every token getting class `other`.
TokenSequence tokenize_code(std::string_view code);

/// Builds a sequence from bare strings (class `other`); handy for tests and
/// for scoring pre-tokenized text.
TokenSequence make_tokens(std::initializer_list<std::string_view> words);

inline constexpr int kDefaultMaxN = 4;
inline constexpr double kDefaultKeywordWeight = 5.0;
inline constexpr double kSmoothingEpsilon = 1e-9;

/// BLEU over token texts: geometric mean of clipped n-gram precisions for
/// n = 1..min(max_n, |gen|, |ref|), zero precisions replaced by
/// kSmoothingEpsilon, times the brevity penalty exp(1 - |ref|/|gen|) when
/// gen is shorter. Both empty -> 1.0, exactly one empty -> 0.0.
double ngram_match(const TokenSequence& gen, const TokenSequence& ref, int max_n = kDefaultMaxN);

/// As ngram_match, but an n-gram containing at least one keyword token
/// (class keyword, or text listed in `extra_keywords`) counts with weight
/// `keyword_weight` in both numerator and denominator of its precision.
double weighted_ngram_match(const TokenSequence& gen, const TokenSequence& ref,
                            int max_n = kDefaultMaxN,
                            double keyword_weight = kDefaultKeywordWeight,
                            const std::unordered_set<std::string>* extra_keywords = nullptr);

/// Error-tolerant Python parse (see python::parse).
python::SyntaxTree parse_syntax(std::string_view code);

/// Fraction of reference subtrees (kind labels only, full descendant
/// structure) found in the generated tree. Each generated subtree can
/// satisfy at most one reference subtree.
double syntax_match(const python::SyntaxTree& gen, const python::SyntaxTree& ref);

/// Ordered tree edit distance with unit insert/delete/relabel costs
/// (Zhang-Shasha). Labels are node kinds.
std::size_t tree_edit_distance(const python::SyntaxTree& a, const python::SyntaxTree& b);

/// tree_edit_distance normalised by |gen| + |ref|; 0 for identical trees.
double ast_distance(const python::SyntaxTree& gen, const python::SyntaxTree& ref);

struct CodeBleuWeights {
  double ngram = 1.0 / 3.0;
  double weighted_ngram = 1.0 / 3.0;
  double syntax = 1.0 / 3.0;
};

/// Weighted sum of the three components. Throws ConfigError when the
/// weights do not sum to one within 1e-9.
double codebleu(double ngram, double weighted_ngram, double syntax,
                const CodeBleuWeights& weights = {});

using EmbeddingVector = std::vector<double>;

/// Source of code embeddings (a CodeBERT-style encoder behind an endpoint,
/// or the offline hashing embedder). Implementations must be safe to call
/// concurrently.
class CodeEmbedder {
 public:
  virtual ~CodeEmbedder() = default;
  /// One vector per input, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> inputs) = 0;
};

/// Deterministic feature-hashed token counts. No network, stable across
/// runs and platforms.
class HashingCodeEmbedder final : public CodeEmbedder {
 public:
  explicit HashingCodeEmbedder(std::size_t dimension = 256);
  std::vector<EmbeddingVector> embed(std::span<const std::string> inputs) override;

 private:
  std::size_t dimension_;
};

double cosine(std::span<const double> a, std::span<const double> b);

/// Cosine similarity of the two code embeddings, clamped below at 0.
/// Identical strings always score 1.0.
double codebert_similarity(std::string_view gen, std::string_view ref, CodeEmbedder& embedder);

/// sqrt(cbleu * cbert).
double text_reward(double cbleu, double cbert);

struct CodeScoreOptions {
  int max_n = kDefaultMaxN;
  double keyword_weight = kDefaultKeywordWeight;
  CodeBleuWeights weights{};
  /// Extra keyword texts (e.g. the library's exported names).
  std::shared_ptr<const std::unordered_set<std::string>> extra_keywords;
};

struct CodeScoreBreakdown {
  double ngram = 0.0;
  double weighted_ngram = 0.0;
  double syntax_match = 0.0;
  double codebleu = 0.0;
  double ast_distance = 0.0;  // diagnostic only
  double codebert_sim = 0.0;
  double text_reward = 0.0;
};

/// All code-level metrics for one (generated, reference) pair.
CodeScoreBreakdown score_code(std::string_view gen, std::string_view ref, CodeEmbedder& embedder,
                              const CodeScoreOptions& options = {});

}  // namespace manimeval::codemetrics
