#include "manimeval/ssim.hpp"

#include <algorithm>
#include <cmath>

#include "manimeval/error.hpp"

namespace manimeval::videometrics {
namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    double d = i - centre;
    k[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable 'valid' filtering of a w x h image given as a per-pixel functor.
template <typename Pixel>
std::vector<double> filter_valid(int w, int h, const std::vector<double>& kernel, Pixel pixel) {
  const int ks = static_cast<int>(kernel.size());
  const int ow = w - ks + 1;
  const int oh = h - ks + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < ks; ++k) acc += kernel[static_cast<std::size_t>(k)] * pixel(x + k, y);
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < ks; ++k) acc += kernel[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

int effective_window(const SsimParams& params, int w, int h) {
  int win = std::min({params.window, w, h});
  if (win % 2 == 0) --win;
  return std::max(win, 1);
}

}  // namespace

SsimStats::SsimStats(const GrayImage& image, const SsimParams& params)
    : params_(params), width_(image.width), height_(image.height), image_(&image) {
  if (image.width <= 0 || image.height <= 0) throw ContractViolation("ssim: empty image");
  const int win = effective_window(params, image.width, image.height);
  kernel_ = gaussian_kernel(win, params.sigma);
  out_w_ = image.width - win + 1;
  out_h_ = image.height - win + 1;
  auto px = [&](int x, int y) { return static_cast<double>(image.at(x, y)); };
  mean_ = filter_valid(image.width, image.height, kernel_, px);
  auto sq = filter_valid(image.width, image.height, kernel_, [&](int x, int y) { return px(x, y) * px(x, y); });
  variance_.resize(mean_.size());
  for (std::size_t i = 0; i < mean_.size(); ++i) variance_[i] = sq[i] - mean_[i] * mean_[i];
}

double ssim(const SsimStats& a, const SsimStats& b) {
  if (a.width_ != b.width_ || a.height_ != b.height_) {
    throw ContractViolation("ssim: frame sizes differ (" + std::to_string(a.width_) + "x" +
                            std::to_string(a.height_) + " vs " + std::to_string(b.width_) + "x" +
                            std::to_string(b.height_) + ")");
  }
  const auto& p = a.params_;
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const GrayImage& ia = *a.image_;
  const GrayImage& ib = *b.image_;
  auto cross = filter_valid(a.width_, a.height_, a.kernel_, [&](int x, int y) {
    return static_cast<double>(ia.at(x, y)) * static_cast<double>(ib.at(x, y));
  });
  double total = 0;
  for (std::size_t i = 0; i < cross.size(); ++i) {
    const double ma = a.mean_[i];
    const double mb = b.mean_[i];
    const double cov = cross[i] - ma * mb;
    const double num = (2 * ma * mb + c1) * (2 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (a.variance_[i] + b.variance_[i] + c2);
    total += num / den;
  }
  return std::clamp(total / static_cast<double>(cross.size()), -1.0, 1.0);
}

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params) {
  if (a.width != b.width || a.height != b.height) {
    throw ContractViolation("ssim: frame sizes differ");
  }
  return ssim(SsimStats(a, params), SsimStats(b, params));
}

}  // namespace manimeval::videometrics
