#pragma once

#include <optional>
#include <span>
#include <vector>

#include "attrition/bernstein.hpp"
#include "attrition/prize.hpp"

namespace attrition {

/// Right-hand side of the static-model ESS equation G' = Xi_N(G).
///
/// Xi_N(xi) = (1 - xi^{N-1}) / ((N-1) sum_r c_r C(N-2, r) xi^r (1-xi)^{N-2-r}).
class XiFunction {
public:
    explicit XiFunction(const PrizeSpec& spec);

    [[nodiscard]] double operator()(double xi) const;
    /// Decay rate of 1 - G near G = 1, i.e. -Xi_N'(1) = 1 / c_{N-2}.
    [[nodiscard]] double decay_rate() const noexcept { return decay_rate_; }

private:
    int players_;
    BernsteinSum denominator_;
    double decay_rate_;
};

[[nodiscard]] double xi(const PrizeSpec& spec, double xi_val);

/// Candidate ESS cdf G_N of the static model on a uniform grid t_m = m * step.
struct EssCurve {
    PrizeSpec spec;
    XiFunction rhs;
    double step = 0.0;
    std::vector<double> t;
    std::vector<double> G;
    std::vector<double> g;  ///< g_m = Xi_N(G_m)
    double tail_tol = 0.0;

    [[nodiscard]] double t_max() const { return t.back(); }
    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    /// 1 - G(t_max).
    [[nodiscard]] double tail_mass() const { return 1.0 - G.back(); }
    /// G at an arbitrary time (RK4 sub-step from the preceding node, exponential tail beyond t_max).
    [[nodiscard]] double cdf(double time) const;
};

struct SolverOptions {
    double step = 0.0;         ///< 0 selects V(1) / 10^4
    double tail_tol = 1e-12;
    int max_halvings = 6;
};

inline constexpr double kStepsPerUnitPrize = 1e4;

/// Fixed-step RK4 from G(0) = 0 until 1 - G < tail_tol; throws StepTooLarge on loss of monotonicity.
[[nodiscard]] EssCurve solve_ess_ode(const PrizeSpec& spec, double step, double tail_tol);

/// solve_ess_ode with the default step, halving it on StepTooLarge.
[[nodiscard]] EssCurve solve_ess_curve(const PrizeSpec& spec, const SolverOptions& options = {});

/// sup_t |G_N(t) - min(V^{-1}(t), 1)| over the curve grid.
[[nodiscard]] double ess_limit_error(const EssCurve& curve);

/// Second-variation kernel of the payoff gap against a single deviating opponent:
///
///   Q(t) = G^{N-2} + (1/2) d/dt sum_r c_r C(N-2, r) G^r (1-G)^{N-2-r},
///
/// evaluated with the exact derivative expansion (no numerical differentiation).
/// For a perturbation H = G + a of one opponent's cdf the payoff advantage of G over H
/// is exactly the integral of Q a^2; Q -> 1 as t -> infinity.
struct QProfile {
    std::vector<double> values;
    double min = 0.0;
    double argmin = 0.0;
};
[[nodiscard]] QProfile q_functional(const EssCurve& curve);

/// Trapezoid quadrature of Q * a^2 on the curve grid; `alpha_samples` has one value per node.
[[nodiscard]] double upsilon(const EssCurve& curve, std::span<const double> alpha_samples);
[[nodiscard]] double upsilon(const EssCurve& curve, const QProfile& q, std::span<const double> alpha_samples);

/// Expected payoff of the pure strategy "quit at x" against N - 1 players using G_N.
[[nodiscard]] double payoff_pure_vs_ess(const EssCurve& curve, double x);
[[nodiscard]] std::vector<double> payoff_pure_vs_ess(const EssCurve& curve, std::span<const double> xs);

enum class InvasionMethod { closed_form, quadrature };
[[nodiscard]] const char* to_string(InvasionMethod m) noexcept;

/// Payoff gap between playing g_N and quitting at once, when one opponent quits at once.
struct InvasionReport {
    int N = 0;
    double delta = 0.0;
    double A_N = 0.0;
    double C_N = 0.0;
    double payoff_gN = 0.0;
    double payoff_delta0 = 0.0;
    double tail_estimate = 0.0;
    InvasionMethod method = InvasionMethod::quadrature;
};

inline constexpr double kMaxTailEstimate = 1e-8;

[[nodiscard]] InvasionReport delta_invasion_quadrature(const EssCurve& curve);
[[nodiscard]] InvasionReport delta_invasion_closed(const EssCurve& curve);

/// sum_{k=0}^{q} C(q, k) (-1)^k / (k - p) = q! Gamma(-p) / Gamma(q + 1 - p), via log-Gamma.
[[nodiscard]] double gamma_sum(int q, double p);

struct RateFit {
    std::vector<int> N;
    std::vector<double> A_N;
    std::vector<double> C_N;
    double slope_A = 0.0;
    double slope_C = 0.0;
};

/// Log-log slopes of |A_N| and |C_N| against N for V(x) = x^alpha.
[[nodiscard]] RateFit invasion_rate_fit(double alpha, std::span<const int> n_list,
                                        const SolverOptions& options = {});

/// Smallest N in [n_lo, n_hi] with a negative invasion gap, if any.
[[nodiscard]] std::optional<int> smallest_invadable_n(double alpha, int n_lo, int n_hi,
                                                     const SolverOptions& options = {});

}  // namespace attrition
