#include "manimeval/codemetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_map>

#include "manimeval/error.hpp"
#include "manimeval/hashing.hpp"
#include "manimeval/python/lexer.hpp"
#include "manimeval/python/parser.hpp"

namespace manimeval::codemetrics {
namespace {

TokenSequence fallback_split(std::string_view code) {
  TokenSequence out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back({std::move(word), TokenClass::other});
    word.clear();
  };
  for (char ch : code) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c == '_' || c >= 0x80) {
      word.push_back(ch);
    } else {
      flush();
      out.push_back({std::string(1, ch), TokenClass::other});
    }
  }
  flush();
  return out;
}

bool is_keyword_token(const CodeToken& t, const std::unordered_set<std::string>* extra) {
  return t.cls == TokenClass::keyword || (extra != nullptr && extra->contains(t.text));
}

std::string ngram_key(const TokenSequence& seq, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) key.push_back('\x1f');
    key += seq[start + k].text;
  }
  return key;
}

// Shared BLEU core. `weight_of` maps (sequence, start, n) to an n-gram weight.
template <typename WeightFn>
double bleu(const TokenSequence& gen, const TokenSequence& ref, int max_n, WeightFn weight_of) {
  if (max_n < 1) throw ContractViolation("ngram_match: max_n must be >= 1");
  if (gen.empty() && ref.empty()) return 1.0;
  if (gen.empty() || ref.empty()) return 0.0;
  std::size_t orders = std::min<std::size_t>({static_cast<std::size_t>(max_n), gen.size(), ref.size()});
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    std::unordered_map<std::string, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[ngram_key(ref, i, n)];
    std::unordered_map<std::string, std::pair<std::size_t, double>> gen_counts;  // count, weight
    for (std::size_t i = 0; i + n <= gen.size(); ++i) {
      auto& slot = gen_counts[ngram_key(gen, i, n)];
      ++slot.first;
      slot.second = std::max(slot.second, weight_of(gen, i, n));
    }
    double matched = 0.0;
    double total = 0.0;
    for (const auto& [key, cw] : gen_counts) {
      auto it = ref_counts.find(key);
      std::size_t clip = it == ref_counts.end() ? 0 : std::min(cw.first, it->second);
      matched += cw.second * static_cast<double>(clip);
      total += cw.second * static_cast<double>(cw.first);
    }
    double p = matched > 0.0 ? matched / total : kSmoothingEpsilon;
    log_sum += std::log(p);
  }
  double score = std::exp(log_sum / static_cast<double>(orders));
  if (gen.size() < ref.size()) {
    score *= std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(gen.size()));
  }
  return std::clamp(score, 0.0, 1.0);
}

// Interns subtree shapes so equal kind-structures share one id.
class ShapeInterner {
 public:
  std::vector<int> shapes(const python::SyntaxTree& tree) {
    std::vector<int> ids(tree.size(), -1);
    compute(tree, python::SyntaxTree::root(), ids);
    return ids;
  }

 private:
  int compute(const python::SyntaxTree& tree, std::size_t id, std::vector<int>& ids) {
    const auto& node = tree.node(id);
    std::vector<int> key;
    key.reserve(node.children.size() + 1);
    key.push_back(kind_id(node.kind));
    for (auto c : node.children) key.push_back(compute(tree, c, ids));
    auto [it, inserted] = table_.try_emplace(std::move(key), static_cast<int>(table_.size()));
    ids[id] = it->second;
    return it->second;
  }

  int kind_id(const std::string& kind) {
    auto [it, inserted] = kinds_.try_emplace(kind, static_cast<int>(kinds_.size()));
    return it->second;
  }

  std::map<std::vector<int>, int> table_;
  std::unordered_map<std::string, int> kinds_;
};

}  // namespace

std::string_view to_string(TokenClass cls) {
  switch (cls) {
    case TokenClass::keyword:
      return "keyword";
    case TokenClass::identifier:
      return "identifier";
    case TokenClass::number:
      return "number";
    case TokenClass::string:
      return "string";
    case TokenClass::op:
      return "operator";
    case TokenClass::punctuation:
      return "punctuation";
    case TokenClass::other:
      return "other";
  }
  return "other";
}

TokenSequence tokenize_code(std::string_view code) {
  auto lexed = python::lex(code);
  if (!lexed.ok()) return fallback_split(code);
  TokenSequence out;
  for (const auto& t : lexed.tokens) {
    TokenClass cls;
    switch (t.kind) {
      case python::TokenKind::keyword:
        cls = TokenClass::keyword;
        break;
      case python::TokenKind::identifier:
        cls = TokenClass::identifier;
        break;
      case python::TokenKind::number:
        cls = TokenClass::number;
        break;
      case python::TokenKind::string:
        cls = TokenClass::string;
        break;
      case python::TokenKind::op:
        cls = TokenClass::op;
        break;
      case python::TokenKind::punct:
        cls = TokenClass::punctuation;
        break;
      default:
        continue;
    }
    out.push_back({t.text, cls});
  }
  return out;
}

TokenSequence make_tokens(std::initializer_list<std::string_view> words) {
  TokenSequence out;
  for (auto w : words) out.push_back({std::string(w), TokenClass::other});
  return out;
}

double ngram_match(const TokenSequence& gen, const TokenSequence& ref, int max_n) {
  return bleu(gen, ref, max_n, [](const TokenSequence&, std::size_t, std::size_t) { return 1.0; });
}

double weighted_ngram_match(const TokenSequence& gen, const TokenSequence& ref, int max_n,
                            double keyword_weight,
                            const std::unordered_set<std::string>* extra_keywords) {
  if (!(keyword_weight >= 1.0)) throw ContractViolation("weighted_ngram_match: keyword_weight must be >= 1");
  return bleu(gen, ref, max_n, [&](const TokenSequence& seq, std::size_t start, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (is_keyword_token(seq[start + k], extra_keywords)) return keyword_weight;
    }
    return 1.0;
  });
}

python::SyntaxTree parse_syntax(std::string_view code) { return python::parse(code); }

double syntax_match(const python::SyntaxTree& gen, const python::SyntaxTree& ref) {
  if (ref.size() == 1) return gen.count_kind(ref.node(0).kind) > 0 ? 1.0 : 0.0;
  ShapeInterner interner;
  auto ref_ids = interner.shapes(ref);
  auto gen_ids = interner.shapes(gen);
  std::unordered_map<int, std::size_t> available;
  for (int id : gen_ids) ++available[id];
  std::size_t matched = 0;
  for (int id : ref_ids) {
    auto it = available.find(id);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref_ids.size());
}

double ast_distance(const python::SyntaxTree& gen, const python::SyntaxTree& ref) {
  auto d = tree_edit_distance(gen, ref);
  return static_cast<double>(d) / static_cast<double>(gen.size() + ref.size());
}

double codebleu(double ngram, double weighted_ngram, double syntax, const CodeBleuWeights& w) {
  double sum = w.ngram + w.weighted_ngram + w.syntax;
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("codebleu: weights must sum to 1");
  if (w.ngram < 0 || w.weighted_ngram < 0 || w.syntax < 0) throw ConfigError("codebleu: negative weight");
  return std::clamp(w.ngram * ngram + w.weighted_ngram * weighted_ngram + w.syntax * syntax, 0.0, 1.0);
}

HashingCodeEmbedder::HashingCodeEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ConfigError("HashingCodeEmbedder: dimension must be positive");
}

std::vector<EmbeddingVector> HashingCodeEmbedder::embed(std::span<const std::string> inputs) {
  std::vector<EmbeddingVector> out;
  out.reserve(inputs.size());
  for (const auto& text : inputs) {
    EmbeddingVector v(dimension_, 0.0);
    auto tokens = tokenize_code(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      v[fnv1a64(tokens[i].text) % dimension_] += 1.0;
      if (i + 1 < tokens.size()) {
        v[fnv1a64(tokens[i].text + "\x1f" + tokens[i + 1].text) % dimension_] += 0.5;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double codebert_similarity(std::string_view gen, std::string_view ref, CodeEmbedder& embedder) {
  if (gen == ref) return 1.0;
  std::vector<std::string> inputs{std::string(gen), std::string(ref)};
  auto vectors = embedder.embed(inputs);
  if (vectors.size() != 2) throw ProviderError("code embedder returned wrong number of vectors");
  for (const auto& v : vectors) {
    for (double x : v)
      if (!std::isfinite(x)) throw ProviderError("code embedder returned non-finite values");
  }
  return std::clamp(cosine(vectors[0], vectors[1]), 0.0, 1.0);
}

double text_reward(double cbleu, double cbert) {
  return std::sqrt(std::clamp(cbleu, 0.0, 1.0) * std::clamp(cbert, 0.0, 1.0));
}

CodeScoreBreakdown score_code(std::string_view gen, std::string_view ref, CodeEmbedder& embedder,
                              const CodeScoreOptions& options) {
  CodeScoreBreakdown out;
  auto gen_tokens = tokenize_code(gen);
  auto ref_tokens = tokenize_code(ref);
  out.ngram = ngram_match(gen_tokens, ref_tokens, options.max_n);
  out.weighted_ngram = weighted_ngram_match(gen_tokens, ref_tokens, options.max_n,
                                            options.keyword_weight, options.extra_keywords.get());
  auto gen_tree = parse_syntax(gen);
  auto ref_tree = parse_syntax(ref);
  out.syntax_match = syntax_match(gen_tree, ref_tree);
  out.codebleu = codebleu(out.ngram, out.weighted_ngram, out.syntax_match, options.weights);
  out.ast_distance = ast_distance(gen_tree, ref_tree);
  out.codebert_sim = codebert_similarity(gen, ref, embedder);
  out.text_reward = text_reward(out.codebleu, out.codebert_sim);
  return out;
}

}  // namespace manimeval::codemetrics
