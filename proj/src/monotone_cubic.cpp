#include "attrition/monotone_cubic.hpp"

#include <algorithm>
#include <cmath>

#include "attrition/errors.hpp"

namespace attrition {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
        throw InvalidParameter("monotone cubic needs at least two (x, y) pairs");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw InvalidParameter("interpolation knots must be strictly increasing in x");
        }
    }

    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }

    slopes_.assign(n, 0.0);
    if (n == 2) {
        slopes_[0] = slopes_[1] = delta[0];
        return;
    }

    // Interior: weighted harmonic mean, zero at local extrema.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slopes_[i] = 0.0;
            continue;
        }
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }

    // Shape-preserving three-point end slopes.
    auto end_slope = [](double h0, double h1, double m0, double m1) {
        double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if (std::signbit(d) != std::signbit(m0)) {
            d = 0.0;
        } else if (std::signbit(m0) != std::signbit(m1) && std::abs(d) > std::abs(3.0 * m0)) {
            d = 3.0 * m0;
        }
        return d;
    };
    slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

MonotoneCubic::Local MonotoneCubic::locate(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    return {h, (x - x_[i]) / h, slopes_[i], slopes_[i + 1], y_[i], y_[i + 1]};
}

double MonotoneCubic::value(double x) const {
    const auto [h, s, d0, d1, y0, y1] = locate(x);
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * h * d1;
}

double MonotoneCubic::derivative(double x) const {
    const auto [h, s, d0, d1, y0, y1] = locate(x);
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * y0 + (-6 * s2 + 6 * s) * y1) / h + (3 * s2 - 4 * s + 1) * d0 +
           (3 * s2 - 2 * s) * d1;
}

double MonotoneCubic::second_derivative(double x) const {
    const auto [h, s, d0, d1, y0, y1] = locate(x);
    return ((12 * s - 6) * y0 + (-12 * s + 6) * y1) / (h * h) + ((6 * s - 4) * d0 + (6 * s - 2) * d1) / h;
}

}  // namespace attrition
