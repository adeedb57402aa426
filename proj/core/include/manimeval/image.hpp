#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace manimeval {

/// 8-bit single-channel image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// 8-bit interleaved RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // r, g, b, r, g, b, ...

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
  [[nodiscard]] const std::uint8_t* at(int x, int y) const {
    return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// ITU-R BT.601 luma, rounded to nearest.
GrayImage to_gray(const RgbImage& rgb);

/// Bilinear resampling with pixel-centre alignment (edge pixels clamped).
GrayImage resize_bilinear(const GrayImage& src, int width, int height);
RgbImage resize_bilinear(const RgbImage& src, int width, int height);

/// PNG file bytes for `image`.
std::string encode_png(const RgbImage& image);

/// Standard base64 (RFC 4648) with padding.
std::string base64_encode(std::string_view bytes);

}  // namespace manimeval
