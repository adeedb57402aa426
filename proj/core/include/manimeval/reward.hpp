#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "manimeval/codemetrics.hpp"
#include "manimeval/videometrics.hpp"

namespace manimeval::rewardcore {

struct RewardWeights {
  double lambda_t = 0.2;
  double lambda_v = 0.8;

  /// Throws ConfigError unless both lie in [0,1] and sum to 1 within 1e-9.
  void validate() const;
};

enum class FailureKind { none, no_code_extracted, render_failed };

std::string_view to_string(FailureKind kind);

struct RewardBreakdown {
  double r_t = 0.0;
  double r_v = 0.0;
  double unified = 0.0;
  std::optional<codemetrics::CodeScoreBreakdown> code_scores;
  std::optional<videometrics::VisualScoreBreakdown> visual_scores;
  FailureKind failure = FailureKind::none;
  std::string error_tail;  // renderer output tail on render_failed
};

/// Result of rendering and sampling generated code.
struct GeneratedVideo {
  std::optional<videometrics::FrameSequence> frames;  // absent on failure
  std::string error_tail;
};

/// Everything unified_reward needs from the outside world.
struct RewardDependencies {
  std::function<std::optional<std::string>(std::string_view completion)> extract;
  std::function<codemetrics::CodeScoreBreakdown(std::string_view gen, std::string_view ref)> score_code;
  std::function<GeneratedVideo(std::string_view code)> render;
  std::function<videometrics::VisualScoreBreakdown(const videometrics::FrameSequence& gen,
                                                   const videometrics::VideoReference& ref)>
      score_visual;
};

/// lambda_t * r_t + lambda_v * r_v.
double combine(double r_t, double r_v, const RewardWeights& weights);

/// Extract -> text reward -> render -> visual reward -> weighted sum.
/// No code: every score 0 and failure no_code_extracted. Render failure:
/// r_v = 0, failure render_failed, r_t still computed.
RewardBreakdown unified_reward(std::string_view completion, std::string_view ref_code,
                               const videometrics::VideoReference& ref_video, const RewardWeights& weights,
                               const RewardDependencies& deps);

}  // namespace manimeval::rewardcore
