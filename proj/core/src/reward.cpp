#include "manimeval/reward.hpp"

#include <cmath>

#include "manimeval/error.hpp"

namespace manimeval::rewardcore {

void RewardWeights::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(lambda_t) || !unit(lambda_v) || std::abs(lambda_t + lambda_v - 1.0) > 1e-9) {
    throw ConfigError("reward weights must be in [0,1] and sum to 1 (got " + std::to_string(lambda_t) + ", " +
                      std::to_string(lambda_v) + ")");
  }
}

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::none:
      return "none";
    case FailureKind::no_code_extracted:
      return "no_code_extracted";
    case FailureKind::render_failed:
      return "render_failed";
  }
  return "unknown";
}

double combine(double r_t, double r_v, const RewardWeights& weights) {
  return weights.lambda_t * r_t + weights.lambda_v * r_v;
}

RewardBreakdown unified_reward(std::string_view completion, std::string_view ref_code,
                               const videometrics::VideoReference& ref_video, const RewardWeights& weights,
                               const RewardDependencies& deps) {
  weights.validate();
  if (!deps.extract || !deps.score_code || !deps.render || !deps.score_visual) {
    throw ContractViolation("unified_reward: missing dependency");
  }
  RewardBreakdown out;
  auto code = deps.extract(completion);
  if (!code) {
    out.failure = FailureKind::no_code_extracted;
    return out;
  }
  out.code_scores = deps.score_code(*code, ref_code);
  out.r_t = out.code_scores->text_reward;

  auto video = deps.render(*code);
  if (!video.frames) {
    out.failure = FailureKind::render_failed;
    out.error_tail = std::move(video.error_tail);
  } else {
    out.visual_scores = deps.score_visual(*video.frames, ref_video);
    out.r_v = out.visual_scores->visual_reward;
  }
  out.unified = combine(out.r_t, out.r_v, weights);
  return out;
}

}  // namespace manimeval::rewardcore
