#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "manimeval/image.hpp"

namespace manimeval::videometrics {

inline constexpr double kDefaultSampleFps = 5.0;

/// Frames sampled at a fixed rate from t = 0. gray[i] is the luma of rgb[i].
struct FrameSequence {
  std::vector<GrayImage> gray;
  std::vector<RgbImage> rgb;
  std::vector<double> timestamps;
  double sample_fps = kDefaultSampleFps;
  double source_duration = 0.0;

  [[nodiscard]] std::size_t size() const { return gray.size(); }
  [[nodiscard]] int width() const { return gray.empty() ? 0 : gray.front().width; }
  [[nodiscard]] int height() const { return gray.empty() ? 0 : gray.front().height; }
};

/// External decoder invocation. The executable must understand ffmpeg's
/// command line: `-i <path> -vf fps=<f>,scale=<w>:<h> -f rawvideo -pix_fmt rgb24 pipe:1`.
struct DecoderConfig {
  std::string executable = "ffmpeg";
  /// Decoded width; height follows the aspect ratio. 0 keeps the source size.
  int scale_width = 256;
  std::chrono::milliseconds timeout{std::chrono::minutes(5)};
};

/// Samples `video` at `fps` frames per second: floor(duration * fps) frames
/// at t = k / fps, and never fewer than one. Throws MediaError with the
/// decoder's diagnostics when the file cannot be decoded.
FrameSequence sample_frames(const std::filesystem::path& video, double fps = kDefaultSampleFps,
                            const DecoderConfig& decoder = {});

/// Builds a sequence from in-memory frames (timestamps k / fps).
FrameSequence make_sequence(std::vector<RgbImage> frames, double fps = kDefaultSampleFps);

/// Copy of `frames` with every frame bilinearly resized to width x height.
FrameSequence resized_to(const FrameSequence& frames, int width, int height);

}  // namespace manimeval::videometrics
