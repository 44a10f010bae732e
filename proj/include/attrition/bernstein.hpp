#pragma once

#include <span>
#include <vector>

namespace attrition {

/// sum_{r=0}^{n} b_r C(n, r) x^r (1 - x)^{n-r} for fixed coefficients b_r.
///
/// Binomial weights are formed in log space so degrees well past the point
/// where C(n, r) overflows a double stay accurate; terms are pairwise summed.
class BernsteinSum {
public:
    BernsteinSum() = default;
    explicit BernsteinSum(std::vector<double> coefficients);

    [[nodiscard]] int degree() const noexcept { return static_cast<int>(coefficients_.size()) - 1; }
    [[nodiscard]] std::span<const double> coefficients() const noexcept { return coefficients_; }

    [[nodiscard]] double operator()(double x) const;

private:
    std::vector<double> coefficients_;
    std::vector<double> log_binomial_;
};

/// The n + 1 Bernstein basis values C(n, r) x^r (1 - x)^{n-r} at x.
[[nodiscard]] std::vector<double> bernstein_basis(int n, double x);

}  // namespace attrition
