#include "manimeval/image.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>

#include "manimeval/error.hpp"

namespace manimeval {
namespace {

void check_size(int width, int height) {
  if (width <= 0 || height <= 0) throw ContractViolation("resize_bilinear: target size must be positive");
}

struct Tap {
  int lo, hi;
  double frac;
};

// Source taps for each destination column/row, pixel centres aligned.
std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> out(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    int lo = static_cast<int>(std::floor(s));
    int hi = std::min(lo + 1, src - 1);
    out[static_cast<std::size_t>(d)] = {lo, hi, s - lo};
  }
  return out;
}

template <int Channels>
std::vector<std::uint8_t> resample(const std::vector<std::uint8_t>& src, int sw, int sh, int dw, int dh) {
  auto xs = taps(sw, dw);
  auto ys = taps(sh, dh);
  std::vector<std::uint8_t> dst(static_cast<std::size_t>(dw) * dh * Channels);
  auto px = [&](int x, int y, int c) {
    return static_cast<double>(src[(static_cast<std::size_t>(y) * sw + x) * Channels + c]);
  };
  for (int y = 0; y < dh; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < dw; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < Channels; ++c) {
        double top = px(tx.lo, ty.lo, c) * (1 - tx.frac) + px(tx.hi, ty.lo, c) * tx.frac;
        double bottom = px(tx.lo, ty.hi, c) * (1 - tx.frac) + px(tx.hi, ty.hi, c) * tx.frac;
        double v = top * (1 - ty.frac) + bottom * ty.frac;
        dst[(static_cast<std::size_t>(y) * dw + x) * Channels + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return dst;
}

}  // namespace

GrayImage to_gray(const RgbImage& rgb) {
  GrayImage out(rgb.width, rgb.height);
  const std::size_t n = out.pixels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = &rgb.pixels[i * 3];
    double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    out.pixels[i] = static_cast<std::uint8_t>(std::min(255L, std::lround(y)));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& src, int width, int height) {
  check_size(width, height);
  if (src.width == width && src.height == height) return src;
  GrayImage out;
  out.width = width;
  out.height = height;
  out.pixels = resample<1>(src.pixels, src.width, src.height, width, height);
  return out;
}

RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
  check_size(width, height);
  if (src.width == width && src.height == height) return src;
  RgbImage out;
  out.width = width;
  out.height = height;
  out.pixels = resample<3>(src.pixels, src.width, src.height, width, height);
  return out;
}

std::string encode_png(const RgbImage& image) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), len);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.at(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace manimeval
