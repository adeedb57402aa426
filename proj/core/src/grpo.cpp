#include "manimeval/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "manimeval/error.hpp"

namespace manimeval::rewardcore {
namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw ContractViolation(std::string(what) + ": non-finite value");
  }
}

void check_group(std::size_t got, int group_size) {
  if (group_size < 1 || got != static_cast<std::size_t>(group_size)) {
    throw ContractViolation("dr_grpo_loss: group has " + std::to_string(got) + " samples, expected " +
                            std::to_string(group_size));
  }
}

}  // namespace

void GrpoHyperparams::validate() const {
  if (!(epsilon > 0)) throw ConfigError("epsilon must be > 0");
  if (!(beta >= 0)) throw ConfigError("beta must be >= 0");
  if (normalizer_length < 1) throw ConfigError("normalizer_length must be >= 1");
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ContractViolation("group_advantages: need at least two rewards");
  require_finite(rewards, "group_advantages");
  const double n = static_cast<double>(rewards.size());
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (std < kDegenerateStd) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std;
  return out;
}

TokenTerms per_token_terms(const TokenLogProbs& lp, double advantage, const GrpoHyperparams& params) {
  params.validate();
  if (lp.current.size() != lp.old.size() || lp.current.size() != lp.reference.size()) {
    throw ContractViolation("per_token_loss: log-probability lengths differ");
  }
  require_finite(lp.current, "per_token_loss");
  require_finite(lp.old, "per_token_loss");
  require_finite(lp.reference, "per_token_loss");
  if (!std::isfinite(advantage)) throw ContractViolation("per_token_loss: non-finite advantage");

  const std::size_t n = lp.current.size();
  TokenTerms t;
  t.surrogate.resize(n);
  t.kl.resize(n);
  t.loss.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ratio = std::exp(lp.current[k] - lp.old[k]);
    const double clipped = std::clamp(ratio, 1.0 - params.epsilon, 1.0 + params.epsilon);
    t.surrogate[k] = std::min(ratio * advantage, clipped * advantage);
    const double d = lp.reference[k] - lp.current[k];
    t.kl[k] = std::exp(d) - d - 1.0;
    t.loss[k] = t.surrogate[k] - params.beta * t.kl[k];
  }
  return t;
}

std::vector<double> per_token_loss(const TokenLogProbs& logprobs, double advantage, const GrpoHyperparams& params) {
  return per_token_terms(logprobs, advantage, params).loss;
}

LossBreakdown dr_grpo_loss(std::span<const TokenTerms> group, const GrpoHyperparams& params, int group_size) {
  params.validate();
  check_group(group.size(), group_size);
  LossBreakdown out;
  double l_sum = 0;
  for (const auto& sample : group) {
    for (double s : sample.surrogate) out.surrogate_sum += s;
    for (double k : sample.kl) out.kl_sum += k;
    for (double l : sample.loss) l_sum += l;
  }
  out.total = -l_sum / (static_cast<double>(params.normalizer_length) * group_size);
  return out;
}

LossBreakdown dr_grpo_loss(std::span<const std::vector<double>> token_losses, const GrpoHyperparams& params,
                           int group_size) {
  params.validate();
  check_group(token_losses.size(), group_size);
  LossBreakdown out;
  for (const auto& sample : token_losses) {
    require_finite(sample, "dr_grpo_loss");
    for (double l : sample) out.surrogate_sum += l;
  }
  out.total = -out.surrogate_sum / (static_cast<double>(params.normalizer_length) * group_size);
  return out;
}

}  // namespace manimeval::rewardcore
