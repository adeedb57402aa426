#pragma once

#include <chrono>
#include <string_view>

#include "manimeval/codemetrics.hpp"
#include "manimeval/frames.hpp"
#include "manimeval/renderer.hpp"
#include "manimeval/reward.hpp"
#include "manimeval/videometrics.hpp"

namespace manimeval::pipeline {

/// Wiring between the renderer, the frame sampler and both scorers. The
/// pointed-to objects must outlive anything built from this.
struct ScoringSetup {
  const renderer::Renderer* renderer = nullptr;
  codemetrics::CodeEmbedder* code_embedder = nullptr;
  videometrics::ImageEmbedder* image_embedder = nullptr;
  codemetrics::CodeScoreOptions code{};
  videometrics::VisualScoreOptions visual{};
  videometrics::DecoderConfig decoder{};
  double sample_fps = videometrics::kDefaultSampleFps;
  renderer::Quality quality = renderer::Quality::low;
  std::chrono::milliseconds render_timeout = renderer::kDefaultTimeout;
};

/// Renders `code` and samples the video. Render failures and undecodable
/// output come back as a GeneratedVideo without frames.
rewardcore::GeneratedVideo render_frames(const ScoringSetup& setup, std::string_view code);

/// Dependencies for rewardcore::unified_reward backed by the real renderer.
rewardcore::RewardDependencies make_reward_dependencies(const ScoringSetup& setup);

}  // namespace manimeval::pipeline
