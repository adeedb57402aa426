#include "manimeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "manimeval/error.hpp"

namespace manimeval::stats {
namespace {

void require_pairs(std::span<const double> xs, std::span<const double> ys, const char* what) {
  if (xs.size() != ys.size()) throw ContractViolation(std::string(what) + ": length mismatch");
  if (xs.size() < 2) throw ContractViolation(std::string(what) + ": need at least two points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw ContractViolation(std::string(what) + ": non-finite value");
  }
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys, "spearman_rho");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys, "kendall_tau");
  // concordant - discordant, and the pairs not tied in x (resp. y)
  long long s = 0, untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const int sx = sign(xs[i] - xs[j]);
      const int sy = sign(ys[i] - ys[j]);
      s += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) return std::numeric_limits<double>::quiet_NaN();
  const double denom = std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
  return std::clamp(static_cast<double>(s) / denom, -1.0, 1.0);
}

}  // namespace manimeval::stats
