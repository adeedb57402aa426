#pragma once

#include <span>
#include <vector>

namespace manimeval::stats {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; NaN when either input has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Pearson correlation of average ranks. Throws ContractViolation on a length
/// mismatch or fewer than two points; NaN when either side is constant.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

/// Kendall tau-b over all pairs. Same contract as spearman_rho.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

}  // namespace manimeval::stats
