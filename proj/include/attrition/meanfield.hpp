#pragma once

#include <functional>
#include <span>
#include <vector>

#include "attrition/prize.hpp"

namespace attrition {

/// Large-N limit at game time t: fraction quit q and quitting rate qdot.
struct MeanFieldState {
    double t = 0.0;
    double q = 0.0;
    double qdot = 0.0;
};

inline constexpr double kMinDerivative = 1e-12;

/// q = V^{-1}(t), qdot = 1 / V'(q).
[[nodiscard]] MeanFieldState q_of_t(const PrizeSpec& spec, double t);

/// m(t, tau) = qdot * exp(-tau / ((1 - q) V'(q))).
[[nodiscard]] double m_density(const PrizeSpec& spec, double t, double tau);

/// Total limiting duration V(1) - V(0).
[[nodiscard]] double total_duration(const PrizeSpec& spec);

/// Open grid of `points` midpoints on [0, V(1)] (endpoints excluded).
[[nodiscard]] std::vector<double> open_time_grid(const PrizeSpec& spec, int points);

using CdfFunction = std::function<double(double)>;

/// int_0^T (phi(t) - q(t))^2 qdot(t) V''(q(t)) dt.
///
/// Evaluated after the substitution t = V(u), which turns the weight qdot dt into du:
/// int_0^1 (phi(V(u)) - u)^2 V''(u) du, by the midpoint rule on `points` cells.
/// Throws InvalidCdf when phi decreases or leaves [0, 1] on the grid.
[[nodiscard]] double ess_perturbation(const PrizeSpec& spec, const CdfFunction& phi, int points = 20000);

}  // namespace attrition
