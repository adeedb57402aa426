#pragma once

#include <vector>

#include "manimeval/image.hpp"

namespace manimeval::videometrics {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Per-frame local statistics (Gaussian-weighted mean and variance over
/// every valid window position). Computing them once lets a frame take part
/// in many comparisons at the cost of one filtered product per pair.
class SsimStats {
 public:
  explicit SsimStats(const GrayImage& image, const SsimParams& params = {});

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }

 private:
  friend double ssim(const SsimStats& a, const SsimStats& b);

  SsimParams params_;
  int width_ = 0;
  int height_ = 0;
  const GrayImage* image_ = nullptr;  // not owned; must outlive the stats
  std::vector<double> kernel_;
  int out_w_ = 0;
  int out_h_ = 0;
  std::vector<double> mean_;
  std::vector<double> variance_;
};

/// Mean SSIM over all window positions that fit inside the image. For
/// images smaller than the window the window shrinks to the largest odd size
/// that fits. Throws ContractViolation on a size mismatch.
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {});
double ssim(const SsimStats& a, const SsimStats& b);

}  // namespace manimeval::videometrics
