#include "attrition/bernstein.hpp"

#include <cmath>

#include "attrition/errors.hpp"
#include "attrition/numerics.hpp"

namespace attrition {

BernsteinSum::BernsteinSum(std::vector<double> coefficients) : coefficients_(std::move(coefficients)) {
    if (coefficients_.empty()) throw InvalidParameter("Bernstein sum needs at least one coefficient");
    const int n = degree();
    log_binomial_.resize(coefficients_.size());
    for (int r = 0; r <= n; ++r) log_binomial_[static_cast<std::size_t>(r)] = log_binomial(n, r);
}

double BernsteinSum::operator()(double x) const {
    const int n = degree();
    if (n == 0) return coefficients_.front();
    if (x <= 0.0) return coefficients_.front();
    if (x >= 1.0) return coefficients_.back();

    thread_local std::vector<double> terms;
    terms.resize(coefficients_.size());
    const double lx = std::log(x);
    const double l1x = std::log1p(-x);
    for (int r = 0; r <= n; ++r) {
        const auto i = static_cast<std::size_t>(r);
        terms[i] = coefficients_[i] * std::exp(log_binomial_[i] + r * lx + (n - r) * l1x);
    }
    return pairwise_sum(terms);
}

std::vector<double> bernstein_basis(int n, double x) {
    if (n < 0) throw InvalidParameter("Bernstein degree must be nonnegative");
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    if (x <= 0.0) {
        w.front() = 1.0;
        return w;
    }
    if (x >= 1.0) {
        w.back() = 1.0;
        return w;
    }
    const double lx = std::log(x);
    const double l1x = std::log1p(-x);
    for (int r = 0; r <= n; ++r) w[static_cast<std::size_t>(r)] = std::exp(log_binomial(n, r) + r * lx + (n - r) * l1x);
    return w;
}

}  // namespace attrition
