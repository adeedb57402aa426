#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace manimeval::videometrics {

struct DtwMode {
  enum class Kind { exact, fast };
  Kind kind = Kind::exact;
  int radius = 1;  // fast mode only

  static DtwMode exact() { return {}; }
  static DtwMode fast(int radius) { return {Kind::fast, radius}; }

  friend bool operator==(const DtwMode&, const DtwMode&) = default;
};

std::string to_string(const DtwMode& mode);

/// Exact DP up to `exact_limit` frames on the longer side, FastDTW beyond.
struct DtwPolicy {
  std::size_t exact_limit = 512;
  int fast_radius = 1;

  [[nodiscard]] DtwMode select(std::size_t max_length) const {
    return max_length <= exact_limit ? DtwMode::exact() : DtwMode::fast(fast_radius);
  }
};

struct AlignmentResult {
  double distance = 0.0;
  std::size_t path_length = 0;
  DtwMode mode;
};

using VectorSequence = std::vector<std::vector<double>>;
using VectorDistance = std::function<double(std::span<const double>, std::span<const double>)>;

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// 1 - <a, b>, floored at 0 so rounding on unit vectors never goes negative.
double inner_product_distance(std::span<const double> a, std::span<const double> b);

/// Minimum cumulative cost over monotone warping paths with steps (1,0),
/// (0,1), (1,1). Fast mode is the multi-resolution approximation: coarsen
/// both series by pairwise averaging, align recursively, then refine inside
/// the projected path widened by `radius`. Its result is never below the
/// exact one and equals it once radius >= max(|a|, |b|).
/// Throws ContractViolation for empty inputs.
AlignmentResult dtw_distance(const VectorSequence& a, const VectorSequence& b, const VectorDistance& dist,
                             DtwMode mode = DtwMode::exact());

/// Scalar series with |x - y| as the local cost.
AlignmentResult dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                             DtwMode mode = DtwMode::exact());

}  // namespace manimeval::videometrics
