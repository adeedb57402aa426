#include "manimeval/pipeline.hpp"

#include "manimeval/codeblock.hpp"
#include "manimeval/error.hpp"
#include "manimeval/process.hpp"

namespace manimeval::pipeline {
namespace {

void require_complete(const ScoringSetup& s) {
  if (!s.renderer || !s.code_embedder || !s.image_embedder) {
    throw ContractViolation("ScoringSetup: renderer and both embedders are required");
  }
}

}  // namespace

rewardcore::GeneratedVideo render_frames(const ScoringSetup& setup, std::string_view code) {
  require_complete(setup);
  renderer::RenderRequest req;
  req.code = std::string(code);
  req.quality = setup.quality;
  req.timeout = setup.render_timeout;
  const auto outcome = setup.renderer->render(req);

  rewardcore::GeneratedVideo video;
  if (!outcome.ok()) {
    video.error_tail = outcome.error_tail;
    return video;
  }
  try {
    video.frames = videometrics::sample_frames(*outcome.video_path, setup.sample_fps, setup.decoder);
  } catch (const MediaError& e) {
    video.error_tail = process::tail_lines(std::string("undecodable video: ") + e.what(),
                                           setup.renderer->config().tail_lines);
  }
  return video;
}

rewardcore::RewardDependencies make_reward_dependencies(const ScoringSetup& setup) {
  require_complete(setup);
  rewardcore::RewardDependencies deps;
  deps.extract = [](std::string_view completion) -> std::optional<std::string> {
    auto snippet = codeblock::extract_code(completion);
    if (!snippet) return std::nullopt;
    return std::move(snippet->code);
  };
  deps.score_code = [setup](std::string_view gen, std::string_view ref) {
    return codemetrics::score_code(gen, ref, *setup.code_embedder, setup.code);
  };
  deps.render = [setup](std::string_view code) { return render_frames(setup, code); };
  deps.score_visual = [setup](const videometrics::FrameSequence& gen, const videometrics::VideoReference& ref) {
    return videometrics::score_video(gen, ref, *setup.image_embedder, setup.visual);
  };
  return deps;
}

}  // namespace manimeval::pipeline
