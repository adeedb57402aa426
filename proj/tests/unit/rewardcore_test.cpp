#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "manimeval/error.hpp"
#include "manimeval/grpo.hpp"
#include "manimeval/reward.hpp"

namespace rc = manimeval::rewardcore;
namespace vm = manimeval::videometrics;

namespace {

double mean_of(const std::vector<double>& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(); }

double pop_std(const std::vector<double>& xs) {
  double m = mean_of(xs), s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / xs.size());
}

rc::TokenLogProbs same_logprobs(std::size_t n, double v) {
  return {std::vector<double>(n, v), std::vector<double>(n, v), std::vector<double>(n, v)};
}

}  // namespace

TEST(GroupAdvantages, HandComputedExample) {
  std::vector<double> r{1, 0, 0, 0, 0, 0, 0, 0};
  auto a = rc::group_advantages(r);
  const double std = std::sqrt(0.125 * 0.875);  // 0.330719
  EXPECT_NEAR(a[0], 0.875 / std, 1e-12);
  EXPECT_NEAR(a[0], 2.6457513, 1e-6);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_NEAR(a[i], -0.125 / std, 1e-12);
}

TEST(GroupAdvantages, NormalisedAndDegenerate) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(8);
    for (auto& x : r) x = u(rng);
    auto a = rc::group_advantages(r);
    EXPECT_NEAR(mean_of(a), 0.0, 1e-9);
    EXPECT_NEAR(pop_std(a), 1.0, 1e-9);
    // Shift and positive scale invariance.
    std::vector<double> shifted(8);
    for (int i = 0; i < 8; ++i) shifted[i] = 3.5 * r[i] + 2.0;
    auto b = rc::group_advantages(shifted);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
  auto zeros = rc::group_advantages(std::vector<double>(8, 0.42));
  for (double z : zeros) EXPECT_EQ(z, 0.0);
  EXPECT_THROW(rc::group_advantages(std::vector<double>{1.0}), manimeval::ContractViolation);
}

TEST(PerTokenLoss, OnPolicyIdentity) {
  auto l = rc::per_token_loss(same_logprobs(5, -1.3), 0.7);
  for (double x : l) EXPECT_DOUBLE_EQ(x, 0.7);
}

TEST(PerTokenLoss, ClippingBranches) {
  rc::TokenLogProbs lp{{std::log(2.0)}, {0.0}, {std::log(2.0)}};
  rc::GrpoHyperparams p;
  p.beta = 0.0;
  EXPECT_NEAR(rc::per_token_terms(lp, 1.0, p).surrogate[0], 1.2, 1e-12);
  EXPECT_NEAR(rc::per_token_terms(lp, -1.0, p).surrogate[0], -2.0, 1e-12);
}

TEST(PerTokenLoss, InsideClipRangeIsRatioTimesAdvantage) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> d(std::log(0.8), std::log(1.2));
  rc::GrpoHyperparams p;
  p.beta = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    double delta = d(rng);
    rc::TokenLogProbs lp{{delta - 1.0}, {-1.0}, {-1.0}};
    double a = std::uniform_real_distribution<double>(-3, 3)(rng);
    EXPECT_NEAR(rc::per_token_loss(lp, a, p)[0], std::exp(delta) * a, 1e-12);
  }
}

TEST(PerTokenLoss, KlEstimatorNonNegative) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> v(-8, 0);
  for (int trial = 0; trial < 500; ++trial) {
    rc::TokenLogProbs lp{{v(rng)}, {v(rng)}, {v(rng)}};
    auto t = rc::per_token_terms(lp, 1.0);
    EXPECT_GE(t.kl[0], 0.0);
  }
  auto t = rc::per_token_terms(same_logprobs(3, -2.0), 1.0);
  for (double k : t.kl) EXPECT_EQ(k, 0.0);
}

TEST(PerTokenLoss, RejectsBadInput) {
  rc::TokenLogProbs lp{{NAN}, {0.0}, {0.0}};
  EXPECT_THROW(rc::per_token_loss(lp, 1.0), manimeval::ContractViolation);
  rc::TokenLogProbs ragged{{0.0, 0.0}, {0.0}, {0.0}};
  EXPECT_THROW(rc::per_token_loss(ragged, 1.0), manimeval::ContractViolation);
  rc::GrpoHyperparams bad;
  bad.epsilon = 0;
  EXPECT_THROW(rc::per_token_loss(same_logprobs(1, 0), 1.0, bad), manimeval::ConfigError);
}

TEST(DrGrpoLoss, Examples) {
  rc::GrpoHyperparams p;
  p.normalizer_length = 4;
  std::vector<std::vector<double>> two{{1, 2}, {5}};
  EXPECT_DOUBLE_EQ(rc::dr_grpo_loss(two, p, 2).total, -1.0);
  std::vector<std::vector<double>> single{{0.6}};
  EXPECT_DOUBLE_EQ(rc::dr_grpo_loss(single, rc::GrpoHyperparams{}, 1).total, -0.6 / 1638);
  std::vector<std::vector<double>> zeros(8, std::vector<double>(3, 0.0));
  EXPECT_EQ(rc::dr_grpo_loss(zeros).total, 0.0);
  EXPECT_THROW(rc::dr_grpo_loss(two, p, 3), manimeval::ContractViolation);
}

TEST(DrGrpoLoss, TermsAgreeWithCombinedLosses) {
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> v(-3, 0);
  std::vector<rc::TokenTerms> terms;
  std::vector<std::vector<double>> losses;
  for (int i = 0; i < 8; ++i) {
    rc::TokenLogProbs lp;
    for (int k = 0; k < 5 + i; ++k) {
      lp.current.push_back(v(rng));
      lp.old.push_back(v(rng));
      lp.reference.push_back(v(rng));
    }
    terms.push_back(rc::per_token_terms(lp, v(rng) + 1.5));
    losses.push_back(terms.back().loss);
  }
  auto full = rc::dr_grpo_loss(terms);
  EXPECT_NEAR(full.total, rc::dr_grpo_loss(losses).total, 1e-15);
  EXPECT_NEAR(full.total, -(full.surrogate_sum - 0.005 * full.kl_sum) / (1638.0 * 8), 1e-15);
}

TEST(RewardWeights, Validation) {
  EXPECT_NO_THROW(rc::RewardWeights{}.validate());
  EXPECT_THROW((rc::RewardWeights{0.5, 0.6}.validate()), manimeval::ConfigError);
  EXPECT_THROW((rc::RewardWeights{-0.1, 1.1}.validate()), manimeval::ConfigError);
  EXPECT_DOUBLE_EQ(rc::combine(0.5, 0.25, {}), 0.3);
}

namespace {

struct FakeWorld {
  int renders = 0;
  bool render_ok = true;

  rc::RewardDependencies deps() {
    rc::RewardDependencies d;
    d.extract = [](std::string_view c) -> std::optional<std::string> {
      if (c.find("CODE") == std::string_view::npos) return std::nullopt;
      return std::string(c);
    };
    d.score_code = [](std::string_view, std::string_view) {
      manimeval::codemetrics::CodeScoreBreakdown s;
      s.text_reward = 0.5;
      return s;
    };
    d.render = [this](std::string_view) {
      ++renders;
      rc::GeneratedVideo v;
      if (render_ok) {
        v.frames = vm::make_sequence({manimeval::RgbImage(4, 4)});
      } else {
        v.error_tail = "NameError: name 'Circel' is not defined";
      }
      return v;
    };
    d.score_visual = [](const vm::FrameSequence&, const vm::VideoReference&) {
      vm::VisualScoreBreakdown s;
      s.visual_reward = 0.25;
      return s;
    };
    return d;
  }
};

}  // namespace

TEST(UnifiedReward, WeightedSum) {
  FakeWorld world;
  vm::VideoReference ref;
  auto r = rc::unified_reward("CODE", "ref", ref, {}, world.deps());
  EXPECT_EQ(r.failure, rc::FailureKind::none);
  EXPECT_DOUBLE_EQ(r.unified, 0.3);
  EXPECT_EQ(world.renders, 1);
}

TEST(UnifiedReward, NoCodeShortCircuits) {
  FakeWorld world;
  vm::VideoReference ref;
  auto r = rc::unified_reward("prose only", "ref", ref, {}, world.deps());
  EXPECT_EQ(r.failure, rc::FailureKind::no_code_extracted);
  EXPECT_EQ(r.r_t, 0.0);
  EXPECT_EQ(r.r_v, 0.0);
  EXPECT_EQ(r.unified, 0.0);
  EXPECT_EQ(world.renders, 0);
}

TEST(UnifiedReward, RenderFailureKeepsTextReward) {
  FakeWorld world;
  world.render_ok = false;
  vm::VideoReference ref;
  auto r = rc::unified_reward("CODE", "ref", ref, {}, world.deps());
  EXPECT_EQ(r.failure, rc::FailureKind::render_failed);
  EXPECT_EQ(r.r_t, 0.5);
  EXPECT_EQ(r.r_v, 0.0);
  EXPECT_DOUBLE_EQ(r.unified, 0.1);
  EXPECT_FALSE(r.error_tail.empty());
}
