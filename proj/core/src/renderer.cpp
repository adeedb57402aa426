#include "manimeval/renderer.hpp"

#include <fnmatch.h>
#include <stdlib.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <regex>
#include <thread>

#include <spdlog/spdlog.h>

#include "manimeval/error.hpp"
#include "manimeval/hashing.hpp"
#include "manimeval/process.hpp"

namespace fs = std::filesystem;

namespace manimeval::renderer {
namespace {

constexpr const char* kNoScene = "no Scene subclass found";
constexpr const char* kSceneFile = "scene.py";

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool has_scene_base(std::string_view bases) {
  std::size_t i = 0;
  while (i < bases.size()) {
    if (!is_ident_char(bases[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < bases.size() && is_ident_char(bases[j])) ++j;
    if (bases.substr(i, j - i).ends_with("Scene")) return true;
    i = j;
  }
  return false;
}

std::shared_ptr<const fs::path> make_workdir(const fs::path& parent_hint) {
  fs::path parent = parent_hint.empty() ? fs::temp_directory_path() : parent_hint;
  std::error_code ec;
  fs::create_directories(parent, ec);
  std::string tmpl = (parent / "manimeval-render-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw EnvironmentError("cannot create work directory under " + parent.string());
  }
  return {new fs::path(tmpl), [](const fs::path* p) {
            std::error_code ignored;
            fs::remove_all(*p, ignored);
            delete p;
          }};
}

std::optional<fs::path> newest_video(const fs::path& media, const std::string& pattern) {
  std::optional<fs::path> best;
  fs::file_time_type best_time{};
  std::error_code ec;
  if (!fs::exists(media, ec)) return std::nullopt;
  for (auto it = fs::recursive_directory_iterator(media, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    const std::string rel = fs::relative(it->path(), media, ec).generic_string();
    if (::fnmatch(pattern.c_str(), rel.c_str(), FNM_PATHNAME) != 0) continue;
    if (it->file_size(ec) == 0) continue;
    auto t = it->last_write_time(ec);
    if (!best || t > best_time) {
      best = it->path();
      best_time = t;
    }
  }
  return best;
}

const std::string& quality_flag(const RendererConfig& c, Quality q) {
  switch (q) {
    case Quality::medium:
      return c.medium_flag;
    case Quality::high:
      return c.high_flag;
    case Quality::low:
      break;
  }
  return c.low_flag;
}

}  // namespace

std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::low:
      return "low";
    case Quality::medium:
      return "medium";
    case Quality::high:
      return "high";
  }
  return "low";
}

Quality parse_quality(std::string_view name) {
  if (name == "low") return Quality::low;
  if (name == "medium") return Quality::medium;
  if (name == "high") return Quality::high;
  throw ConfigError("unknown render quality '" + std::string(name) + "' (expected low, medium or high)");
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::success:
      return "success";
    case Status::fail:
      return "fail";
    case Status::timeout:
      return "timeout";
  }
  return "fail";
}

std::optional<std::string> detect_scene(std::string_view code) {
  static const std::regex class_re(R"((?:^|\n)[ \t]*class[ \t]+([A-Za-z_]\w*)[ \t]*\(([^)]*)\))");
  const std::string text(code);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), class_re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (has_scene_base(m[2].str())) return m[1].str();
  }
  return std::nullopt;
}

Renderer::Renderer(RendererConfig config) : config_(std::move(config)) {
  if (config_.executable.empty()) throw ConfigError("renderer executable must not be empty");
  if (config_.workers < 1) throw ConfigError("renderer workers must be >= 1");
  if (config_.tail_lines < 1) throw ConfigError("renderer tail_lines must be >= 1");
}

void Renderer::check_available() const {
  if (!process::find_executable(config_.executable)) {
    throw EnvironmentError("renderer executable '" + config_.executable + "' not found on PATH");
  }
}

RenderOutcome Renderer::render(const RenderRequest& request) const {
  if (request.timeout.count() <= 0) throw ContractViolation("render: timeout must be > 0");
  check_available();

  RenderOutcome out;
  const auto scene = request.scene_name ? request.scene_name : detect_scene(request.code);
  if (!scene) {
    out.error_tail = kNoScene;
    return out;
  }

  out.workdir = make_workdir(request.workdir.empty() ? config_.temp_root : request.workdir);
  const fs::path& dir = *out.workdir;
  {
    std::ofstream f(dir / kSceneFile, std::ios::binary);
    f << request.code;
    if (!f) throw EnvironmentError("cannot write " + (dir / kSceneFile).string());
  }
  const fs::path media = dir / "media";

  std::vector<std::string> argv = config_.command_prefix;
  argv.insert(argv.end(), {config_.executable, config_.subcommand, quality_flag(config_, request.quality),
                           config_.media_dir_flag, media.string(), kSceneFile, *scene});
  process::Options opts;
  opts.cwd = dir;
  opts.timeout = request.timeout;
  opts.merge_stderr = true;
  opts.extra_env = config_.extra_env;

  const auto result = process::run(argv, opts);
  out.wall_time = std::chrono::duration<double>(result.elapsed).count();
  const std::size_t n = config_.tail_lines;

  if (result.timed_out) {
    out.status = Status::timeout;
    out.error_tail = process::tail_lines(
        result.out + "\nrender timed out after " +
            std::to_string(std::chrono::duration<double>(request.timeout).count()) + " s",
        n);
    return out;
  }
  if (!result.ok()) {
    out.error_tail = process::tail_lines(result.out, n);
    if (out.error_tail.empty()) {
      out.error_tail = result.term_signal ? "renderer killed by signal " + std::to_string(result.term_signal)
                                          : "renderer exited with code " + std::to_string(result.exit_code);
    }
    return out;
  }
  auto video = newest_video(media, config_.video_glob);
  if (!video) {
    out.error_tail = process::tail_lines(result.out + "\nno video file produced", n);
    return out;
  }
  out.status = Status::success;
  out.video_path = std::move(video);
  return out;
}

std::vector<RenderOutcome> Renderer::render_all(std::span<const RenderRequest> requests) const {
  std::vector<RenderOutcome> outcomes(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i] = render(requests[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(config_.workers, requests.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outcomes;
}

RenderCache::RenderCache(fs::path dir, const Renderer& renderer) : dir_(std::move(dir)), renderer_(renderer) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw EnvironmentError("cannot create render cache " + dir_.string() + ": " + ec.message());
}

std::string RenderCache::key(std::string_view code, Quality quality) {
  Sha256 h;
  h.update("quality=").update(to_string(quality)).update("\n").update(code);
  return h.hex_digest();
}

fs::path RenderCache::path_for(std::string_view code, Quality quality) const {
  return dir_ / (key(code, quality) + ".mp4");
}

RenderOutcome RenderCache::get_or_render(const RenderRequest& request) const {
  const fs::path target = path_for(request.code, request.quality);
  std::error_code ec;
  if (fs::is_regular_file(target, ec) && fs::file_size(target, ec) > 0) {
    RenderOutcome hit;
    hit.status = Status::success;
    hit.video_path = target;
    return hit;
  }
  RenderOutcome fresh = renderer_.render(request);
  if (!fresh.ok()) return fresh;

  // Copy next to the target, then rename, so readers never see a partial file.
  std::lock_guard lock(mutex_);
  const fs::path partial = target.string() + ".partial";
  fs::copy_file(*fresh.video_path, partial, fs::copy_options::overwrite_existing, ec);
  if (!ec) fs::rename(partial, target, ec);
  if (ec) throw EnvironmentError("cannot store render in cache " + target.string() + ": " + ec.message());
  spdlog::debug("cached render {}", target.string());

  RenderOutcome stored;
  stored.status = Status::success;
  stored.video_path = target;
  stored.wall_time = fresh.wall_time;
  return stored;
}

}  // namespace manimeval::renderer
