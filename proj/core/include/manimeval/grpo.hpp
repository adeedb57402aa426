#pragma once

#include <span>
#include <vector>

namespace manimeval::rewardcore {

inline constexpr int kDefaultGroupSize = 8;
inline constexpr double kDegenerateStd = 1e-8;

struct GrpoHyperparams {
  double epsilon = 0.2;
  double beta = 0.005;
  /// Constant length normaliser: floor(0.8 * 2048).
  int normalizer_length = 1638;

  /// Throws ConfigError unless epsilon > 0, beta >= 0, normalizer_length >= 1.
  void validate() const;
};

/// (R_i - mean) / std with the population std of the group; all zeros when
/// std < 1e-8. Throws ContractViolation for fewer than two rewards or
/// non-finite values.
std::vector<double> group_advantages(std::span<const double> rewards);

struct TokenLogProbs {
  std::vector<double> current;    // log pi_theta
  std::vector<double> old;        // log pi_theta_old
  std::vector<double> reference;  // log pi_ref
};

/// Per-token pieces of the objective for one sample.
struct TokenTerms {
  std::vector<double> surrogate;  // min(r A, clip(r, 1-eps, 1+eps) A)
  std::vector<double> kl;         // exp(ref - cur) - (ref - cur) - 1
  std::vector<double> loss;       // surrogate - beta * kl
};

/// Throws ContractViolation on length mismatch or non-finite log-probabilities.
TokenTerms per_token_terms(const TokenLogProbs& logprobs, double advantage, const GrpoHyperparams& params = {});

/// per_token_terms(...).loss
std::vector<double> per_token_loss(const TokenLogProbs& logprobs, double advantage,
                                   const GrpoHyperparams& params = {});

struct LossBreakdown {
  double surrogate_sum = 0.0;
  double kl_sum = 0.0;
  double total = 0.0;  // -(1 / (L * G)) * sum of all l
};

/// Loss over a group from full per-token terms.
LossBreakdown dr_grpo_loss(std::span<const TokenTerms> group, const GrpoHyperparams& params = {},
                           int group_size = kDefaultGroupSize);

/// Loss over a group from the combined per-token losses only; surrogate_sum
/// then holds the plain sum of l and kl_sum is 0.
LossBreakdown dr_grpo_loss(std::span<const std::vector<double>> token_losses, const GrpoHyperparams& params = {},
                           int group_size = kDefaultGroupSize);

}  // namespace manimeval::rewardcore
