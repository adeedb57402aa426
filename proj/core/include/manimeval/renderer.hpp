#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace manimeval::renderer {

inline constexpr std::size_t kErrorTailLines = 10;
inline constexpr std::chrono::seconds kDefaultTimeout{120};

enum class Quality { low, medium, high };

std::string_view to_string(Quality q);
/// "low" | "medium" | "high"; anything else throws ConfigError.
Quality parse_quality(std::string_view name);

enum class Status { success, fail, timeout };

std::string_view to_string(Status s);

struct RendererConfig {
  std::string executable = "manim";
  std::string subcommand = "render";
  /// Prepended to the command line, e.g. {"prlimit", "--as=4000000000"} for resource limits.
  std::vector<std::string> command_prefix;
  std::string low_flag = "-ql";
  std::string medium_flag = "-qm";
  std::string high_flag = "-qh";
  std::string media_dir_flag = "--media_dir";
  /// fnmatch pattern, relative to the media directory.
  std::string video_glob = "videos/*/*/*.mp4";
  /// Parent for fresh per-request work directories; empty means the system temp dir.
  std::filesystem::path temp_root;
  std::vector<std::pair<std::string, std::string>> extra_env;
  std::size_t workers = 1;
  std::size_t tail_lines = kErrorTailLines;
};

struct RenderRequest {
  std::string code;
  std::optional<std::string> scene_name;  // detected from code when absent
  Quality quality = Quality::low;
  std::chrono::milliseconds timeout = kDefaultTimeout;
  /// Parent directory for this request's fresh work directory; empty uses the config's temp_root.
  std::filesystem::path workdir;
};

struct RenderOutcome {
  Status status = Status::fail;
  std::string error_tail;  // at most tail_lines lines; empty on success
  std::optional<std::filesystem::path> video_path;
  double wall_time = 0.0;  // seconds

  [[nodiscard]] bool ok() const { return status == Status::success; }

  /// Keeps the work directory alive; it is removed once the last copy of the
  /// outcome is destroyed.
  std::shared_ptr<const std::filesystem::path> workdir;
};

/// Name of the first class whose bases include an identifier ending in "Scene".
std::optional<std::string> detect_scene(std::string_view code);

class Renderer {
 public:
  explicit Renderer(RendererConfig config = {});

  /// Bad user code is a fail/timeout outcome. Throws EnvironmentError when
  /// the renderer executable cannot be started.
  [[nodiscard]] RenderOutcome render(const RenderRequest& request) const;

  /// Renders on a pool of config().workers threads; outcomes in request order.
  [[nodiscard]] std::vector<RenderOutcome> render_all(std::span<const RenderRequest> requests) const;

  /// Throws EnvironmentError when the executable is not on PATH.
  void check_available() const;

  [[nodiscard]] const RendererConfig& config() const { return config_; }

 private:
  RendererConfig config_;
};

/// Successful renders copied into `dir` under sha256(quality + code). Failed
/// renders are not cached.
class RenderCache {
 public:
  RenderCache(std::filesystem::path dir, const Renderer& renderer);

  [[nodiscard]] static std::string key(std::string_view code, Quality quality);
  [[nodiscard]] std::filesystem::path path_for(std::string_view code, Quality quality) const;

  /// Cached video when present, otherwise renders and stores it on success.
  [[nodiscard]] RenderOutcome get_or_render(const RenderRequest& request) const;

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  const Renderer& renderer_;
  mutable std::mutex mutex_;
};

}  // namespace manimeval::renderer
