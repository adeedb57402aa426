#include "manimeval/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "manimeval/error.hpp"

namespace manimeval::videometrics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  std::size_t i, j;
};

// Inclusive column range per row.
struct Band {
  std::vector<std::size_t> lo, hi;
};

struct WindowResult {
  double distance;
  std::vector<Cell> path;  // (0,0) .. (n-1,m-1)
};

Band full_band(std::size_t n, std::size_t m) {
  return {std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, m - 1)};
}

WindowResult dtw_in_band(const VectorSequence& a, const VectorSequence& b, const VectorDistance& dist,
                         const Band& band) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<double>> acc(n);
  auto value = [&](std::size_t i, std::size_t j) {
    if (j < band.lo[i] || j > band.hi[i]) return kInf;
    return acc[i][j - band.lo[i]];
  };
  for (std::size_t i = 0; i < n; ++i) {
    acc[i].assign(band.hi[i] - band.lo[i] + 1, kInf);
    for (std::size_t j = band.lo[i]; j <= band.hi[i]; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, value(i - 1, j));
        if (j > 0) best = std::min(best, value(i, j - 1));
        if (i > 0 && j > 0) best = std::min(best, value(i - 1, j - 1));
      }
      if (best == kInf) continue;
      acc[i][j - band.lo[i]] = (i == 0 && j == 0) ? dist(a[0], b[0]) : best + dist(a[i], b[j]);
    }
  }

  WindowResult out{value(n - 1, m - 1), {}};
  // Backtrack, preferring the diagonal on ties.
  std::size_t i = n - 1, j = m - 1;
  out.path.push_back({i, j});
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      double d = value(i - 1, j - 1), up = value(i - 1, j), left = value(i, j - 1);
      if (d <= up && d <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    out.path.push_back({i, j});
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

VectorSequence coarsen(const VectorSequence& s) {
  VectorSequence out;
  out.reserve((s.size() + 1) / 2);
  for (std::size_t k = 0; k + 1 < s.size(); k += 2) {
    std::vector<double> v(s[k].size());
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = (s[k][d] + s[k + 1][d]) / 2;
    out.push_back(std::move(v));
  }
  if (s.size() % 2 == 1) out.push_back(s.back());
  return out;
}

// Projects a coarse path onto the fine grid, widened by `radius` coarse cells.
Band project(const std::vector<Cell>& path, std::size_t n_coarse, std::size_t m_coarse, std::size_t n,
             std::size_t m, int radius) {
  const auto r = static_cast<std::ptrdiff_t>(radius);
  std::vector<std::ptrdiff_t> clo(n_coarse, std::numeric_limits<std::ptrdiff_t>::max());
  std::vector<std::ptrdiff_t> chi(n_coarse, -1);
  for (const auto& c : path) {
    const auto ci = static_cast<std::ptrdiff_t>(c.i);
    const auto cj = static_cast<std::ptrdiff_t>(c.j);
    for (std::ptrdiff_t row = std::max<std::ptrdiff_t>(0, ci - r);
         row <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n_coarse) - 1, ci + r); ++row) {
      clo[static_cast<std::size_t>(row)] = std::min(clo[static_cast<std::size_t>(row)], std::max<std::ptrdiff_t>(0, cj - r));
      chi[static_cast<std::size_t>(row)] =
          std::max(chi[static_cast<std::size_t>(row)], std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(m_coarse) - 1, cj + r));
    }
  }
  Band band{std::vector<std::size_t>(n), std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = std::min(i / 2, n_coarse - 1);
    band.lo[i] = std::min(static_cast<std::size_t>(clo[c]) * 2, m - 1);
    band.hi[i] = std::min(static_cast<std::size_t>(chi[c]) * 2 + 1, m - 1);
  }
  return band;
}

WindowResult fast_dtw(const VectorSequence& a, const VectorSequence& b, const VectorDistance& dist, int radius) {
  const std::size_t min_size = static_cast<std::size_t>(radius) + 2;
  if (a.size() < min_size || b.size() < min_size) return dtw_in_band(a, b, dist, full_band(a.size(), b.size()));
  auto ca = coarsen(a);
  auto cb = coarsen(b);
  auto coarse = fast_dtw(ca, cb, dist, radius);
  return dtw_in_band(a, b, dist, project(coarse.path, ca.size(), cb.size(), a.size(), b.size(), radius));
}

}  // namespace

std::string to_string(const DtwMode& mode) {
  return mode.kind == DtwMode::Kind::exact ? "exact" : "fast(" + std::to_string(mode.radius) + ")";
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("euclidean_distance: dimension mismatch");
  if (a.size() == 1) return std::abs(a[0] - b[0]);
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double inner_product_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("inner_product_distance: dimension mismatch");
  double dot = 0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return std::max(0.0, 1.0 - dot);
}

AlignmentResult dtw_distance(const VectorSequence& a, const VectorSequence& b, const VectorDistance& dist,
                             DtwMode mode) {
  if (a.empty() || b.empty()) throw ContractViolation("dtw_distance: empty sequence");
  if (mode.kind == DtwMode::Kind::fast && mode.radius < 0) throw ContractViolation("dtw_distance: negative radius");
  auto result = mode.kind == DtwMode::Kind::exact ? dtw_in_band(a, b, dist, full_band(a.size(), b.size()))
                                                  : fast_dtw(a, b, dist, mode.radius);
  return {result.distance, result.path.size(), mode};
}

AlignmentResult dtw_distance(const std::vector<double>& a, const std::vector<double>& b, DtwMode mode) {
  VectorSequence va, vb;
  va.reserve(a.size());
  vb.reserve(b.size());
  for (double x : a) va.push_back({x});
  for (double y : b) vb.push_back({y});
  return dtw_distance(va, vb, euclidean_distance, mode);
}

}  // namespace manimeval::videometrics
