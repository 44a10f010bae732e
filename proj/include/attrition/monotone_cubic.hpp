#pragma once

#include <span>
#include <vector>

namespace attrition {

/// Piecewise cubic Hermite interpolant with Fritsch-Butland slopes.
///
/// For strictly increasing data the interpolant is strictly increasing and C1;
/// it never overshoots the data the way a natural cubic spline can.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    [[nodiscard]] double value(double x) const;
    [[nodiscard]] double derivative(double x) const;
    /// Piecewise second derivative; discontinuous at the knots.
    [[nodiscard]] double second_derivative(double x) const;

    [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> y() const noexcept { return y_; }

private:
    struct Local {
        double h, s, d0, d1, y0, y1;
    };
    [[nodiscard]] Local locate(double x) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slopes_;
};

}  // namespace attrition
