#pragma once

#include <span>
#include <utility>
#include <vector>

namespace attrition {

/// Pairwise (cascade) summation; error grows like O(log n) instead of O(n).
[[nodiscard]] double pairwise_sum(std::span<const double> values);

/// Trapezoid rule on a uniform grid with spacing h.
[[nodiscard]] double trapezoid(std::span<const double> f, double h);

/// Running integral F[i] = int_{x_0}^{x_i} f on a uniform grid.
///
/// Each cell uses the quadratic through three neighbouring nodes, so the
/// result is third-order accurate; F[0] = 0.
[[nodiscard]] std::vector<double> cumulative_integral(std::span<const double> f, double h);

/// Least-squares slope of y against x.
[[nodiscard]] double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Wilson score interval for a binomial proportion at standard-normal quantile z.
[[nodiscard]] std::pair<double, double> wilson_interval(long long successes, long long trials, double z);

/// Standard normal quantile.
[[nodiscard]] double normal_quantile(double p);

/// log C(n, k).
[[nodiscard]] double log_binomial(int n, int k);

}  // namespace attrition
