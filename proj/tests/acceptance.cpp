#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "attrition/cli.hpp"
#include "attrition/dynamic_model.hpp"
#include "attrition/meanfield.hpp"
#include "attrition/parallel.hpp"
#include "attrition/simulate.hpp"
#include "attrition/static_model.hpp"

using namespace attrition;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::vector<double> random_rates(std::mt19937_64& gen, int n, double min_gap) {
    std::uniform_real_distribution<double> u(0.5, 10.0);
    std::vector<double> rates;
    while (static_cast<int>(rates.size()) < n) {
        const double x = u(gen);
        bool ok = true;
        for (double y : rates) ok = ok && std::abs(x - y) / std::max(x, y) > min_gap;
        if (ok) rates.push_back(x);
    }
    return rates;
}

// Density of the sum of exponentials from a fixed-step RK4 solve of the forward equations:
// f(t) = lambda_n * P{exactly n - 1 jumps by t}.
std::vector<double> forward_oracle_density(const std::vector<double>& rates, double t_end, int samples) {
    const auto n = rates.size();
    const int sub = 200;
    const double h = t_end / (samples - 1) / sub;
    std::vector<double> p(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
    p[0] = 1.0;
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& d) {
        for (std::size_t i = 0; i < n; ++i) d[i] = -rates[i] * x[i] + (i ? rates[i - 1] * x[i - 1] : 0.0);
    };
    std::vector<double> out;
    out.push_back(rates[n - 1] * p[n - 1]);
    for (int s = 1; s < samples; ++s) {
        for (int j = 0; j < sub; ++j) {
            rhs(p, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
            rhs(tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
            rhs(tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
            rhs(tmp, k4);
            for (std::size_t i = 0; i < n; ++i) p[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        out.push_back(rates[n - 1] * p[n - 1]);
    }
    return out;
}

Outcome hypoexponential_oracle() {
    Outcome o;
    std::mt19937_64 gen(20240601);
    std::uniform_int_distribution<int> size(1, 12);
    double worst = 0.0;
    const int samples = 501;
    for (int set = 0; set < 50; ++set) {
        const auto rates = random_rates(gen, size(gen), 0.05);
        const auto oracle = forward_oracle_density(rates, 5.0, samples);
        for (int s = 0; s < samples; ++s) {
            const double t = 5.0 * s / (samples - 1);
            worst = std::max(worst, std::abs(hypoexp_density(rates, t) - oracle[static_cast<std::size_t>(s)]));
        }
    }
    o.require(worst <= 1e-8, "max abs error " + fmt("%.2e", worst) + " <= 1e-8");
    return o;
}

Outcome transition_matrix_oracle() {
    Outcome o;
    std::mt19937_64 gen(77);
    double entry = 0.0, rows = 0.0, semigroup = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        for (int n = 2; n <= 8; ++n) {
            auto rates = random_rates(gen, n - 1, 0.05);
            rates.push_back(0.0);
            const auto r = make_rate_sequence(rates);
            for (double t : {0.05, 0.3, 1.1}) {
                const auto p = transition_matrix(r, t).entries;
                const Eigen::MatrixXd e = (intensity_matrix(r) * t).exp();
                entry = std::max(entry, (p - e).cwiseAbs().maxCoeff());
                rows = std::max(rows, (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
            }
            const double s = 0.17, t = 0.41;
            const auto lhs = transition_matrix(r, s + t).entries;
            const Eigen::MatrixXd rhs = transition_matrix(r, s).entries * transition_matrix(r, t).entries;
            semigroup = std::max(semigroup, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    o.require(entry <= 1e-8, "expm gap " + fmt("%.2e", entry));
    o.require(rows <= 1e-9, "row-sum gap " + fmt("%.2e", rows));
    o.require(semigroup <= 1e-8, "semigroup gap " + fmt("%.2e", semigroup));
    return o;
}

Outcome mean_path_limits() {
    Outcome o;
    struct Case {
        double alpha;
        std::function<double(double)> limit;
        const char* name;
    };
    const Case cases[] = {{2.0, [](double t) { return std::sqrt(t); }, "x^2 vs sqrt t"},
                          {0.5, [](double t) { return t * t; }, "sqrt x vs t^2"}};
    std::vector<double> times;
    for (int k = 0; k <= 180; ++k) times.push_back(0.005 * k);
    for (const auto& c : cases) {
        double err[2] = {0.0, 0.0};
        double var200 = 0.0;
        const int ns[] = {25, 200};
        for (int idx = 0; idx < 2; ++idx) {
            const auto rseq = ess_rates(make_prize(PowerPrize{c.alpha}, ns[idx]));
            for (const auto& d : state_probs_series(rseq, times)) {
                const auto m = moments_of_X(d);
                err[idx] = std::max(err[idx], std::abs(m.mean - c.limit(d.t)));
                if (idx == 1) var200 = std::max(var200, m.variance);
            }
        }
        o.require(err[1] <= 0.05, std::string(c.name) + ": sup err " + fmt("%.4f", err[1]) + " <= 0.05");
        o.require(var200 <= 0.01, "sup var " + fmt("%.2e", var200) + " <= 0.01");
        o.require(err[1] < err[0], "N=200 err below N=25 err " + fmt("%.4f", err[0]));
    }
    return o;
}

Outcome duration_limit() {
    Outcome o;
    double prev = 1e9;
    bool decreasing = true;
    double t200 = 0.0;
    for (int n : {25, 50, 100, 200}) {
        const auto spec = make_prize(PowerPrize{2.0}, n);
        const double gap = std::abs(expected_duration(spec) - spec.top());
        decreasing = decreasing && gap < prev;
        prev = gap;
        if (n == 200) t200 = expected_duration(spec);
    }
    o.require(std::abs(t200 - 1.0) <= 0.01, "T_200 = " + fmt("%.6f", t200));
    o.require(decreasing, "|T_N - V(1)| decreasing");
    return o;
}

Outcome ess_limit() {
    Outcome o;
    for (double a : {0.5, 1.0, 2.0}) {
        double prev = 1e9;
        bool decreasing = true;
        double last = 0.0;
        for (int n : {10, 50, 200}) {
            last = ess_limit_error(solve_ess_curve(make_prize(PowerPrize{a}, n)));
            decreasing = decreasing && last < prev;
            prev = last;
        }
        o.require(decreasing && last <= 0.02, "alpha " + fmt("%g", a) + ": gap at N=200 " + fmt("%.4f", last));
    }
    return o;
}

Outcome q_certificate() {
    Outcome o;
    const auto convex = q_functional(solve_ess_curve(make_prize(PowerPrize{2.0}, 25)));
    const auto concave = q_functional(solve_ess_curve(make_prize(PowerPrize{0.5}, 25)));
    o.require(convex.min >= -1e-9, "alpha 2 min Q " + fmt("%.3e", convex.min));
    o.require(concave.values.front() < 0.0, "alpha 0.5 Q(0) " + fmt("%.4f", concave.values.front()));
    o.require(std::abs(convex.values.back() - 1.0) <= 0.05 && std::abs(concave.values.back() - 1.0) <= 0.05,
              "Q(t_max) " + fmt("%.4f", convex.values.back()) + ", " + fmt("%.4f", concave.values.back()));
    return o;
}

Outcome nash_indifference() {
    Outcome o;
    double worst = 0.0;
    for (double a : {0.5, 1.0, 2.0}) {
        for (int n : {5, 25}) {
            const auto curve = solve_ess_curve(make_prize(PowerPrize{a}, n));
            std::vector<double> xs;
            for (int i = 0; i < 200; ++i) xs.push_back(curve.t_max() * i / 199.0);
            const auto j = payoff_pure_vs_ess(curve, xs);
            const auto [lo, hi] = std::minmax_element(j.begin(), j.end());
            worst = std::max(worst, (*hi - *lo) / curve.spec.prize(n));
        }
    }
    o.require(worst <= 1e-6, "max spread / V_N " + fmt("%.2e", worst));
    return o;
}

Outcome invasion_gap() {
    Outcome o;
    double agree = 0.0;
    for (double a : {0.5, 1.0, 1.5}) {
        for (int n : {5, 10, 20}) {
            const auto curve = solve_ess_curve(make_prize(PowerPrize{a}, n));
            agree = std::max(agree, std::abs(delta_invasion_closed(curve).delta - delta_invasion_quadrature(curve).delta));
        }
    }
    o.require(agree <= 1e-6, "closed vs quadrature " + fmt("%.2e", agree));

    std::vector<double> linear(32);
    parallel_for(linear.size(), [&](std::size_t i) {
        const int n = 4 + static_cast<int>(i);
        linear[i] = delta_invasion_closed(solve_ess_curve(make_prize(PowerPrize{1.0}, n))).delta;
    });
    const double min_linear = *std::min_element(linear.begin(), linear.end());
    o.require(min_linear > 0.0, "alpha 1 min delta over N=4..35 " + fmt("%.3e", min_linear));
    const double d05 = delta_invasion_closed(solve_ess_curve(make_prize(PowerPrize{0.5}, 35))).delta;
    const double d15 = delta_invasion_closed(solve_ess_curve(make_prize(PowerPrize{1.5}, 35))).delta;
    o.require(d05 < 0.0, "delta_35(0.5) " + fmt("%.4e", d05));
    o.require(d15 > 0.0, "delta_35(1.5) " + fmt("%.4e", d15));
    return o;
}

Outcome decay_rates() {
    Outcome o;
    const int ns[] = {20, 40, 80, 160, 320};
    const auto fit = invasion_rate_fit(0.5, ns);
    o.require(std::abs(fit.slope_A + 1.0) <= 0.2, "slope |A_N| " + fmt("%.4f", fit.slope_A) + " vs -1 +- 0.2");
    o.require(std::abs(fit.slope_C + 0.5) <= 0.1, "slope |C_N| " + fmt("%.4f", fit.slope_C) + " vs -0.5 +- 0.1");
    return o;
}

Outcome perturbation_signs() {
    Outcome o;
    const std::vector<std::function<double(double)>> warps = {
        [](double u) { return u * u; },
        [](double u) { return std::max(0.0, (u - 0.2) / 0.8); },
        [](double u) { return u + 0.5 * std::sin(M_PI * u) / M_PI; },
    };
    double min_convex = 1e9, max_concave = -1e9, max_linear = 0.0;
    for (const auto& w : warps) {
        auto value = [&](double a) {
            const auto s = make_prize(PowerPrize{a}, 2);
            return ess_perturbation(s, [&](double t) { return w(s.inverse(t)); });
        };
        min_convex = std::min(min_convex, value(2.0));
        max_concave = std::max(max_concave, value(0.5));
        max_linear = std::max(max_linear, std::abs(value(1.0)));
    }
    o.require(min_convex > 0.0, "alpha 2 min " + fmt("%.4e", min_convex));
    o.require(max_concave < 0.0, "alpha 0.5 max " + fmt("%.4e", max_concave));
    o.require(max_linear <= 1e-10, "alpha 1 max |.| " + fmt("%.2e", max_linear));
    return o;
}

Outcome indistinguishability() {
    Outcome o;
    const int ns[] = {50, 800};
    const auto res = theorem2_experiment(StrategyDensity::exponential(1.0), StrategyDensity::half_normal_matched(1.0),
                                         0.5, ns, 0.1, 12345, 1000);
    const auto& a = res.rows[0];
    const auto& b = res.rows[1];
    o.require(b.exceedance < a.exceedance && b.ci_hi < a.ci_lo,
              "N=50 " + fmt("%.3f", a.exceedance) + " [" + fmt("%.3f", a.ci_lo) + ", " + fmt("%.3f", a.ci_hi) +
                  "], N=800 " + fmt("%.3f", b.exceedance) + " [" + fmt("%.3f", b.ci_lo) + ", " +
                  fmt("%.3f", b.ci_hi) + "]");
    return o;
}

Outcome monte_carlo() {
    Outcome o;
    const auto spec = make_prize(PowerPrize{1.0}, 10);
    const std::vector<double> times = {0.2, 0.5, 1.0};
    const long long reps = 100000;
    const auto run = simulate_dynamic_game(spec, times, 31337, reps);
    const auto rseq = ess_rates(spec);
    double worst_z = 0.0, worst_mean = 0.0;
    bool within = true;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const auto d = state_probs(rseq, times[j]);
        for (std::size_t i = 0; i < 10; ++i) {
            const double p = d.probs[i];
            const double sigma = std::sqrt(p * (1.0 - p) / reps);
            const double gap = std::abs(run.column("state_freq")[j * 10 + i] - p);
            if (sigma > 0.0) worst_z = std::max(worst_z, gap / sigma);
            within = within && gap <= 4.0 * sigma + 1e-12;
        }
        const double dm = std::abs(run.column("emp_E_X")[j] - moments_of_X(d).mean) / run.column("ci")[j];
        worst_mean = std::max(worst_mean, dm);
    }
    o.require(within, "max state z " + fmt("%.2f", worst_z) + " <= 4");
    o.require(worst_mean <= 1.0, "max |E gap| / 99% CI " + fmt("%.2f", worst_mean));
    return o;
}

Outcome determinism() {
    Outcome o;
    const std::vector<std::vector<std::string>> runs = {
        {"simulate-dynamic", "--n", "10", "--replicates", "20000", "--seed", "9"},
        {"simulate-static", "--n", "4", "--replicates", "20000", "--seed", "9"},
        {"theorem2", "--n", "50,100", "--replicates", "300", "--seed", "9"},
    };
    bool same = true;
    for (const auto& args : runs) {
        std::string first;
        for (const char* cap : {"1", "2", "1"}) {
            setenv("ATTRITION_THREADS", cap, 1);
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            same = same && code == 0;
            if (first.empty()) {
                first = out.str();
            } else {
                same = same && out.str() == first;
            }
        }
    }
    unsetenv("ATTRITION_THREADS");
    o.require(same, "byte-identical CSV across repeats and thread caps");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"hypoexponential density vs forward-equation oracle", 5, hypoexponential_oracle},
        {"transition matrix vs matrix exponential", 5, transition_matrix_oracle},
        {"E[X(t)] and Var X(t) limits", 30, mean_path_limits},
        {"expected duration limit", 0, duration_limit},
        {"static ESS cdf converges to the inverse prize", 30, ess_limit},
        {"Q certificate signs and limit", 0, q_certificate},
        {"Nash indifference of the pure-strategy payoff", 0, nash_indifference},
        {"invasion gap routes agree and signs", 120, invasion_gap},
        {"decay rates of A_N and C_N", 0, decay_rates},
        {"mean-field perturbation signs", 0, perturbation_signs},
        {"strategy indistinguishability experiment", 120, indistinguishability},
        {"Monte Carlo vs closed form", 0, monte_carlo},
        {"seeded determinism", 0, determinism},
    };
    int failures = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0) o.require(secs < c.budget_s, "runtime " + fmt("%.1f", secs) + " s < " + fmt("%g", c.budget_s) + " s");
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", index - failures, index);
    return failures == 0 ? 0 : 1;
}
