#include "manimeval/frames.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>

#include "manimeval/error.hpp"
#include "manimeval/process.hpp"

namespace manimeval::videometrics {
namespace {

struct StreamInfo {
  double duration = -1.0;  // negative when the container does not say
  int width = 0;
  int height = 0;
};

process::Options with_timeout(std::chrono::milliseconds timeout) {
  process::Options options;
  options.timeout = timeout;
  return options;
}

// `ffmpeg -i` without an output always exits non-zero; the stream summary is
// on stderr either way.
StreamInfo probe(const std::filesystem::path& video, const DecoderConfig& decoder) {
  auto result = process::run({decoder.executable, "-hide_banner", "-nostdin", "-i", video.string()},
                             with_timeout(decoder.timeout));
  const std::string& log = result.err;
  StreamInfo info;
  static const std::regex duration_re(R"(Duration:\s*(\d+):(\d+):(\d+(?:\.\d+)?))");
  static const std::regex video_re(R"(Stream #[^\n]*Video:[^\n]*?,\s*(\d+)x(\d+)[\s,\[])");
  std::smatch m;
  if (std::regex_search(log, m, duration_re)) {
    info.duration = std::stod(m[1]) * 3600 + std::stod(m[2]) * 60 + std::stod(m[3]);
  }
  if (std::regex_search(log, m, video_re)) {
    info.width = std::stoi(m[1]);
    info.height = std::stoi(m[2]);
  }
  if (info.width <= 0 || info.height <= 0) {
    throw MediaError("cannot decode " + video.string() + ": " + process::tail_lines(log, 10));
  }
  return info;
}

std::string format_fps(double fps) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", fps);
  return buf;
}

}  // namespace

FrameSequence sample_frames(const std::filesystem::path& video, double fps, const DecoderConfig& decoder) {
  if (!(fps > 0)) throw ContractViolation("sample_frames: fps must be positive");
  if (!std::filesystem::is_regular_file(video)) throw MediaError("no such video file: " + video.string());

  auto info = probe(video, decoder);
  int out_w = info.width;
  int out_h = info.height;
  if (decoder.scale_width > 0) {
    out_w = decoder.scale_width;
    out_h = std::max(1, static_cast<int>(std::lround(static_cast<double>(info.height) * out_w / info.width)));
  }
  // round=up keeps, for each output slot k, the frame on screen at t = k / fps
  // (the default rounding picks the next native frame instead).
  const std::string filter =
      "fps=" + format_fps(fps) + ":round=up,scale=" + std::to_string(out_w) + ":" + std::to_string(out_h);
  auto result = process::run({decoder.executable, "-hide_banner", "-nostdin", "-loglevel", "error", "-i",
                              video.string(), "-vf", filter, "-f", "rawvideo", "-pix_fmt", "rgb24", "pipe:1"},
                             with_timeout(decoder.timeout));
  if (!result.ok()) {
    throw MediaError("decoder failed on " + video.string() + ": " +
                     (result.timed_out ? std::string("timed out") : process::tail_lines(result.err, 10)));
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(out_w) * out_h * 3;
  std::size_t decoded = result.out.size() / frame_bytes;
  if (decoded == 0) {
    throw MediaError("decoder produced no frames for " + video.string() + ": " + process::tail_lines(result.err, 10));
  }
  std::size_t wanted = decoded;
  if (info.duration >= 0) {
    wanted = static_cast<std::size_t>(std::floor(info.duration * fps + 1e-6));
    wanted = std::clamp<std::size_t>(wanted, 1, decoded);
  }

  std::vector<RgbImage> frames;
  frames.reserve(wanted);
  for (std::size_t k = 0; k < wanted; ++k) {
    RgbImage img;
    img.width = out_w;
    img.height = out_h;
    auto begin = result.out.begin() + static_cast<std::ptrdiff_t>(k * frame_bytes);
    img.pixels.assign(begin, begin + static_cast<std::ptrdiff_t>(frame_bytes));
    frames.push_back(std::move(img));
  }
  auto seq = make_sequence(std::move(frames), fps);
  seq.source_duration = info.duration >= 0 ? info.duration : static_cast<double>(decoded) / fps;
  return seq;
}

FrameSequence make_sequence(std::vector<RgbImage> frames, double fps) {
  if (frames.empty()) throw ContractViolation("make_sequence: at least one frame required");
  if (!(fps > 0)) throw ContractViolation("make_sequence: fps must be positive");
  FrameSequence seq;
  seq.sample_fps = fps;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    seq.gray.push_back(to_gray(frames[k]));
    seq.timestamps.push_back(static_cast<double>(k) / fps);
  }
  seq.rgb = std::move(frames);
  seq.source_duration = static_cast<double>(seq.rgb.size()) / fps;
  return seq;
}

FrameSequence resized_to(const FrameSequence& frames, int width, int height) {
  FrameSequence out;
  out.timestamps = frames.timestamps;
  out.sample_fps = frames.sample_fps;
  out.source_duration = frames.source_duration;
  for (const auto& g : frames.gray) out.gray.push_back(resize_bilinear(g, width, height));
  for (const auto& c : frames.rgb) out.rgb.push_back(resize_bilinear(c, width, height));
  return out;
}

}  // namespace manimeval::videometrics
