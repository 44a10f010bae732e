#include "attrition/static_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "attrition/errors.hpp"
#include "attrition/numerics.hpp"

namespace attrition {

namespace {

constexpr double kOvershootTolerance = 1e-9;
constexpr std::size_t kMaxSteps = 200'000'000;

double rk4_step(const XiFunction& f, double y, double h) {
    const double k1 = f(y);
    const double k2 = f(y + 0.5 * h * k1);
    const double k3 = f(y + 0.5 * h * k2);
    const double k4 = f(y + h * k3);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One RK4 step of (G, K) with G' = Xi(G), K' = G^{power}.
std::pair<double, double> rk4_step_with_integral(const XiFunction& f, double y, double h, int power) {
    auto kf = [power](double v) { return std::pow(std::clamp(v, 0.0, 1.0), power); };
    const double k1 = f(y), m1 = kf(y);
    const double y2 = y + 0.5 * h * k1;
    const double k2 = f(y2), m2 = kf(y2);
    const double y3 = y + 0.5 * h * k2;
    const double k3 = f(y3), m3 = kf(y3);
    const double y4 = y + h * k3;
    const double k4 = f(y4), m4 = kf(y4);
    return {y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4)};
}

std::vector<double> shifted_prizes(const PrizeSpec& spec, std::size_t first) {
    const auto v = spec.values();
    return {v.begin() + static_cast<std::ptrdiff_t>(first), v.end()};
}

/// int_0^infinity (1 - G)(1 - G^{N-2}) dt: grid quadrature plus the exponential tail.
std::pair<double, double> loser_cost_integral(const EssCurve& curve) {
    const int n = curve.spec.players();
    std::vector<double> f(curve.size());
    for (std::size_t m = 0; m < curve.size(); ++m) {
        const double G = curve.G[m];
        f[m] = (1.0 - G) * -std::expm1((n - 2) * std::log(std::max(G, 1e-300)));
    }
    const double body = cumulative_integral(f, curve.step).back();
    const double u = curve.tail_mass();
    const double tail = (n - 2) * u * u / (2.0 * curve.rhs.decay_rate());
    return {body, tail};
}

void check_tail(double tail) {
    if (tail > kMaxTailEstimate) {
        std::ostringstream os;
        os << "tail estimate " << tail << " exceeds " << kMaxTailEstimate << "; solve with a smaller tail_tol";
        throw TailNotConverged(os.str());
    }
}

/// Gamma-function value as (log|Gamma(x)|, sign) for x not a nonpositive integer.
std::pair<double, int> log_gamma_signed(double x) {
    int sign = 1;
    if (x < 0.0) sign = (static_cast<long long>(std::floor(x)) % 2 == 0) ? 1 : -1;
    // std::lgamma is evaluated on |Gamma|; the sign is tracked separately.
    return {std::lgamma(x), sign};
}

std::pair<double, int> log_gamma_sum(int q, double p) {
    if (q < 0) throw InvalidParameter("gamma_sum needs q >= 0");
    if (p >= 0.0 && p == std::floor(p)) throw InvalidParameter("gamma_sum needs p outside {0, 1, 2, ...}");
    const auto [la, sa] = log_gamma_signed(-p);
    const auto [lb, sb] = log_gamma_signed(q + 1.0 - p);
    return {std::lgamma(q + 1.0) + la - lb, sa * sb};
}

}  // namespace

XiFunction::XiFunction(const PrizeSpec& spec)
    : players_(spec.players()),
      denominator_(std::vector<double>(spec.diffs().begin(), spec.diffs().end())),
      decay_rate_(1.0 / spec.diffs().back()) {}

double XiFunction::operator()(double x) const {
    if (x >= 1.0) return 0.0;
    const double x0 = std::max(x, 0.0);
    const double numerator = x0 == 0.0 ? 1.0 : -std::expm1((players_ - 1) * std::log(x0));
    return numerator / ((players_ - 1) * denominator_(x0));
}

double xi(const PrizeSpec& spec, double xi_val) {
    if (!(xi_val >= 0.0 && xi_val <= 1.0)) throw DomainError("Xi_N is defined on [0, 1]");
    return XiFunction(spec)(xi_val);
}

double EssCurve::cdf(double time) const {
    if (time <= 0.0) return 0.0;
    if (time >= t_max()) return 1.0 - tail_mass() * std::exp(-rhs.decay_rate() * (time - t_max()));
    const auto m = std::min(static_cast<std::size_t>(time / step), size() - 1);
    const double h = time - t[m];
    if (h <= 0.0) return G[m];
    return std::clamp(rk4_step(rhs, G[m], h), 0.0, 1.0);
}

EssCurve solve_ess_ode(const PrizeSpec& spec, double step, double tail_tol) {
    if (!(step > 0.0)) throw InvalidParameter("ODE step must be positive");
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw InvalidParameter("tail_tol must lie in (0, 1)");

    EssCurve curve{spec, XiFunction(spec), step, {}, {}, {}, tail_tol};
    curve.t.push_back(0.0);
    curve.G.push_back(0.0);
    curve.g.push_back(curve.rhs(0.0));

    double G = 0.0;
    for (std::size_t m = 1; 1.0 - G >= tail_tol; ++m) {
        if (m > kMaxSteps) throw NumericalFailure("ESS ODE did not reach the tail tolerance");
        const double next = rk4_step(curve.rhs, G, step);
        if (next < G) {
            throw StepTooLarge("G decreased at t = " + std::to_string(m * step));
        }
        if (next > 1.0 + kOvershootTolerance) {
            throw StepTooLarge("G overshot 1 at t = " + std::to_string(m * step));
        }
        if (next == G && G < 1.0) throw NumericalFailure("ESS ODE stalled below the tail tolerance");
        G = std::min(next, 1.0);
        curve.t.push_back(static_cast<double>(m) * step);
        curve.G.push_back(G);
        curve.g.push_back(curve.rhs(G));
    }
    return curve;
}

EssCurve solve_ess_curve(const PrizeSpec& spec, const SolverOptions& options) {
    double step = options.step > 0.0 ? options.step : spec.top() / kStepsPerUnitPrize;
    for (int attempt = 0;; ++attempt) {
        try {
            return solve_ess_ode(spec, step, options.tail_tol);
        } catch (const StepTooLarge&) {
            if (attempt >= options.max_halvings) throw;
            step *= 0.5;
        }
    }
}

double ess_limit_error(const EssCurve& curve) {
    const auto& spec = curve.spec;
    double worst = 0.0;
    for (std::size_t m = 0; m < curve.size(); ++m) {
        const double t = curve.t[m];
        const double target = t >= spec.top() ? 1.0 : spec.inverse(t);
        worst = std::max(worst, std::abs(curve.G[m] - target));
    }
    return worst;
}

QProfile q_functional(const EssCurve& curve) {
    const int n = curve.spec.players();
    const auto c = curve.spec.diffs();
    QProfile out;
    out.values.resize(curve.size());

    BernsteinSum slope;
    if (n >= 3) {
        std::vector<double> dc(c.size() - 1);
        for (std::size_t r = 0; r + 1 < c.size(); ++r) dc[r] = c[r + 1] - c[r];
        slope = BernsteinSum(std::move(dc));
    }
    for (std::size_t m = 0; m < curve.size(); ++m) {
        const double G = curve.G[m];
        double q = std::pow(G, n - 2);
        // d/dt sum_r c_r b_{N-2,r}(G) = g (N-2) sum_r (c_{r+1} - c_r) b_{N-3,r}(G)
        if (n >= 3) q += 0.5 * curve.g[m] * (n - 2) * slope(G);
        out.values[m] = q;
    }
    const auto it = std::min_element(out.values.begin(), out.values.end());
    out.min = *it;
    out.argmin = curve.t[static_cast<std::size_t>(it - out.values.begin())];
    return out;
}

double upsilon(const EssCurve& curve, const QProfile& q, std::span<const double> alpha_samples) {
    if (alpha_samples.size() != curve.size() || q.values.size() != curve.size()) {
        throw InvalidParameter("upsilon needs one perturbation sample per curve node");
    }
    std::vector<double> f(curve.size());
    for (std::size_t m = 0; m < f.size(); ++m) f[m] = q.values[m] * alpha_samples[m] * alpha_samples[m];
    return trapezoid(f, curve.step);
}

double upsilon(const EssCurve& curve, std::span<const double> alpha_samples) {
    return upsilon(curve, q_functional(curve), alpha_samples);
}

std::vector<double> payoff_pure_vs_ess(const EssCurve& curve, std::span<const double> xs) {
    const int n = curve.spec.players();
    // J(x) = sum_{r=0}^{N-1} (V_{r+1} - x) b_{N-1,r}(G(x)) + int_0^x G^{N-1} dy,
    // the last-place prize having been integrated by parts.
    const BernsteinSum rank_prize(shifted_prizes(curve.spec, 0));
    std::vector<double> powers(curve.size());
    for (std::size_t m = 0; m < curve.size(); ++m) powers[m] = std::pow(curve.G[m], n - 1);
    const auto running = cumulative_integral(powers, curve.step);

    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) {
        if (!(x >= 0.0 && x <= curve.t_max() * (1.0 + 1e-12))) {
            throw DomainError("pure strategy must quit within [0, t_max]");
        }
        const auto m = std::min(static_cast<std::size_t>(x / curve.step), curve.size() - 1);
        double G = curve.G[m];
        double area = running[m];
        const double h = x - curve.t[m];
        if (h > 0.0) {
            const auto [next, extra] = rk4_step_with_integral(curve.rhs, G, h, n - 1);
            G = std::clamp(next, 0.0, 1.0);
            area += extra;
        }
        out.push_back(rank_prize(G) - x + area);
    }
    return out;
}

double payoff_pure_vs_ess(const EssCurve& curve, double x) {
    const double xs[] = {x};
    return payoff_pure_vs_ess(curve, xs).front();
}

const char* to_string(InvasionMethod m) noexcept {
    return m == InvasionMethod::closed_form ? "closed_form" : "quadrature";
}

InvasionReport delta_invasion_quadrature(const EssCurve& curve) {
    const auto& spec = curve.spec;
    const int n = spec.players();
    if (n < 3) throw InvalidParameter("the invasion gap needs N >= 3");

    // E[V_{rank+1}] for the g_N player when one opponent has already left.
    const BernsteinSum shifted(shifted_prizes(spec, 1));
    std::vector<double> f(curve.size());
    for (std::size_t m = 0; m < curve.size(); ++m) f[m] = curve.g[m] * shifted(curve.G[m]);
    const double prize_body = cumulative_integral(f, curve.step).back();
    const double prize_tail = spec.prize(n) * curve.tail_mass();
    const auto [cost_body, cost_tail] = loser_cost_integral(curve);
    const double tail = prize_tail + cost_tail;
    check_tail(tail);

    InvasionReport rep;
    rep.N = n;
    rep.method = InvasionMethod::quadrature;
    rep.payoff_gN = (prize_body + prize_tail) - (cost_body + cost_tail);
    rep.payoff_delta0 = 0.5 * (spec.prize(1) + spec.prize(2));
    rep.delta = rep.payoff_gN - rep.payoff_delta0;
    rep.A_N = rep.payoff_gN;
    rep.C_N = -rep.payoff_delta0;
    rep.tail_estimate = tail;
    return rep;
}

InvasionReport delta_invasion_closed(const EssCurve& curve) {
    const auto& spec = curve.spec;
    const int n = spec.players();
    if (n < 4) throw InvalidParameter("the closed-form invasion gap needs N >= 4");
    const auto c = spec.diffs();
    const double vn = spec.prize(n);

    // int g_N sum_r V_{r+2} b_{N-2,r}(G_N) dt after two integrations by parts; the inner
    // binomial sums collapse through the Gamma identity.
    std::vector<double> terms;
    terms.push_back(vn);
    terms.push_back(-0.5 * (n - 2) * (vn - spec.prize(n - 1)));
    const double log_front = std::log(0.5 * (n - 2) * (n - 3));
    for (int r = 0; r <= n - 4; ++r) {
        const auto [lg, sg] = log_gamma_sum(n - 4 - r, -(3.0 + r));
        const double weight = sg * std::exp(log_front + log_binomial(n - 4, r) + lg);
        const auto i = static_cast<std::size_t>(r);
        terms.push_back(weight * (c[i + 2] - c[i + 1]));
    }
    const double prize_part = pairwise_sum(terms);
    const auto [cost_body, cost_tail] = loser_cost_integral(curve);
    check_tail(cost_tail);

    InvasionReport rep;
    rep.N = n;
    rep.method = InvasionMethod::closed_form;
    rep.A_N = prize_part - (cost_body + cost_tail);
    rep.C_N = -0.5 * (spec.prize(1) + spec.prize(2));
    rep.delta = rep.A_N + rep.C_N;
    rep.payoff_gN = rep.A_N;
    rep.payoff_delta0 = -rep.C_N;
    rep.tail_estimate = cost_tail;
    return rep;
}

double gamma_sum(int q, double p) {
    const auto [lg, sg] = log_gamma_sum(q, p);
    return sg * std::exp(lg);
}

RateFit invasion_rate_fit(double alpha, std::span<const int> n_list, const SolverOptions& options) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("rate fit is defined for alpha in (0, 1]");
    if (n_list.size() < 4) throw InvalidParameter("rate fit needs at least four values of N");
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) throw InvalidParameter("rate fit needs increasing N");
    }
    if (n_list.front() < 4) throw InvalidParameter("rate fit needs N >= 4");

    RateFit fit;
    std::vector<double> log_n, log_a, log_c;
    for (int n : n_list) {
        const auto curve = solve_ess_curve(make_prize(PowerPrize{alpha}, n), options);
        const auto rep = delta_invasion_closed(curve);
        fit.N.push_back(n);
        fit.A_N.push_back(rep.A_N);
        fit.C_N.push_back(rep.C_N);
        log_n.push_back(std::log(static_cast<double>(n)));
        log_a.push_back(std::log(std::abs(rep.A_N)));
        log_c.push_back(std::log(std::abs(rep.C_N)));
    }
    fit.slope_A = least_squares_slope(log_n, log_a);
    fit.slope_C = least_squares_slope(log_n, log_c);
    return fit;
}

std::optional<int> smallest_invadable_n(double alpha, int n_lo, int n_hi, const SolverOptions& options) {
    for (int n = std::max(n_lo, 4); n <= n_hi; ++n) {
        const auto curve = solve_ess_curve(make_prize(PowerPrize{alpha}, n), options);
        if (delta_invasion_closed(curve).delta < 0.0) return n;
    }
    return std::nullopt;
}

}  // namespace attrition
