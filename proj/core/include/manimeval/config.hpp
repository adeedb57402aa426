#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "manimeval/agent.hpp"
#include "manimeval/codemetrics.hpp"
#include "manimeval/frames.hpp"
#include "manimeval/grpo.hpp"
#include "manimeval/http.hpp"
#include "manimeval/renderer.hpp"
#include "manimeval/reward.hpp"
#include "manimeval/videometrics.hpp"

namespace manimeval::config {

/// Either the offline hashing embedder or an HTTP endpoint.
struct EmbedderConfig {
  enum class Kind { hashing, http };
  Kind kind = Kind::hashing;
  std::size_t dimension = 0;  // hashing only; 0 picks the embedder's default
  std::string model;          // http only
  http::EndpointConfig endpoint;
  std::size_t batch_size = 16;  // image embedders only
};

struct GrpoConfig {
  int group_size = rewardcore::kDefaultGroupSize;
  rewardcore::GrpoHyperparams hyper{};
};

struct KbConfig {
  std::filesystem::path source;  // Python package to ingest; empty disables RITL-DOC
  std::filesystem::path cache;   // KB JSON file; empty means no persistence
};

struct RunConfig {
  agent::AgentConfig agent{};
  std::filesystem::path templates_file;  // empty keeps the built-in prompts
  agent::GenerationParams generation{};

  rewardcore::RewardWeights weights{};
  GrpoConfig grpo{};

  codemetrics::CodeScoreOptions code{};
  EmbedderConfig code_embedder{};

  double sample_fps = videometrics::kDefaultSampleFps;
  videometrics::VisualScoreOptions visual{};
  EmbedderConfig image_embedder{};
  videometrics::DecoderConfig decoder{};

  renderer::RendererConfig renderer{};
  renderer::Quality quality = renderer::Quality::low;
  std::chrono::milliseconds render_timeout = renderer::kDefaultTimeout;

  KbConfig kb{};
  std::filesystem::path cache_dir = ".manimeval-cache";
  std::filesystem::path output_dir = "manimeval-out";
  std::size_t workers = 1;  // records evaluated concurrently

  /// Throws ConfigError when any constant is out of range.
  void validate() const;
};

/// Parses a JSON document mirroring RunConfig. Absent keys keep their
/// defaults; unknown keys are rejected. Relative input paths (templates,
/// kb) resolve against `base_dir`; output paths stay relative to the working
/// directory. Throws ConfigError.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& file);

/// Full JSON form of `config`; parse_run_config reads it back unchanged.
std::string to_json(const RunConfig& config);

std::unique_ptr<codemetrics::CodeEmbedder> make_code_embedder(const EmbedderConfig& config);
std::unique_ptr<videometrics::ImageEmbedder> make_image_embedder(const EmbedderConfig& config);

}  // namespace manimeval::config
