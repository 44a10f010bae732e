#include "attrition/meanfield.hpp"

#include <cmath>

#include "attrition/errors.hpp"
#include "attrition/numerics.hpp"

namespace attrition {

namespace {

constexpr double kCdfSlack = 1e-12;

}  // namespace

MeanFieldState q_of_t(const PrizeSpec& spec, double t) {
    if (!(t >= 0.0 && t <= spec.top())) throw DomainError("mean-field time must lie in [0, V(1)]");
    const double q = spec.inverse(t);
    const double slope = spec.derivative(q);
    if (!(slope >= kMinDerivative)) {
        throw SingularDerivative("V'(q) vanishes at t = " + std::to_string(t));
    }
    return {t, q, 1.0 / slope};
}

double m_density(const PrizeSpec& spec, double t, double tau) {
    if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
    if (!(t < spec.top())) throw DomainError("m(t, tau) needs t < V(1)");
    const auto s = q_of_t(spec, t);
    const double mean_wait = (1.0 - s.q) / s.qdot;
    return s.qdot * std::exp(-tau / mean_wait);
}

double total_duration(const PrizeSpec& spec) { return spec.top() - spec.value(0.0); }

std::vector<double> open_time_grid(const PrizeSpec& spec, int points) {
    if (points < 1) throw InvalidParameter("grid needs at least one point");
    std::vector<double> t(static_cast<std::size_t>(points));
    const double h = spec.top() / points;
    for (int i = 0; i < points; ++i) t[static_cast<std::size_t>(i)] = (i + 0.5) * h;
    return t;
}

double ess_perturbation(const PrizeSpec& spec, const CdfFunction& phi, int points) {
    if (points < 2) throw InvalidParameter("perturbation grid needs at least two cells");
    const double h = 1.0 / points;
    std::vector<double> f(static_cast<std::size_t>(points));
    double previous = 0.0;
    for (int i = 0; i < points; ++i) {
        const double u = (i + 0.5) * h;
        const double p = phi(spec.value(u));
        if (!(p >= -kCdfSlack && p <= 1.0 + kCdfSlack)) throw InvalidCdf("phi leaves [0, 1]");
        if (p < previous - kCdfSlack) throw InvalidCdf("phi decreases");
        previous = p;
        const double d = p - u;
        f[static_cast<std::size_t>(i)] = d * d * spec.second_derivative(u) * h;
    }
    return pairwise_sum(f);
}

}  // namespace attrition
