#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "attrition/errors.hpp"
#include "attrition/numerics.hpp"
#include "attrition/static_model.hpp"

using namespace attrition;

namespace {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

double bern(int n, int r, double x) {
    if (r < 0 || r > n) return 0.0;
    return binomial(n, r) * std::pow(x, r) * std::pow(1.0 - x, n - r);
}

const EssCurve& cached_curve(double alpha, int n) {
    static std::vector<std::pair<std::pair<double, int>, EssCurve>> cache;
    for (const auto& [key, curve] : cache) {
        if (key.first == alpha && key.second == n) return curve;
    }
    cache.emplace_back(std::make_pair(alpha, n), solve_ess_curve(make_prize(PowerPrize{alpha}, n)));
    return cache.back().second;
}

// Payoff advantage of G over H = G + a when N - 2 opponents play G and one plays H,
// computed from the pure-strategy payoff against that population.
double payoff_gap(const EssCurve& curve, const std::vector<double>& a, const std::vector<double>& da) {
    const int n = curve.spec.players();
    const double h = curve.step;
    std::vector<double> j(curve.size());
    double area = 0.0, prev = 0.0;
    for (std::size_t m = 0; m < curve.size(); ++m) {
        const double G = curve.G[m];
        const double H = G + a[m];
        const double cur = std::pow(G, n - 2) * H;
        if (m > 0) area += 0.5 * h * (prev + cur);
        prev = cur;
        double prize = 0.0;
        for (int r = 0; r <= n - 1; ++r) {
            const double pr = (1.0 - H) * bern(n - 2, r, G) + H * bern(n - 2, r - 1, G);
            prize += (curve.spec.prize(r + 1) - curve.spec.prize(1)) * pr;
        }
        j[m] = prize - curve.t[m] + area;
    }
    std::vector<double> f(curve.size());
    for (std::size_t m = 0; m < f.size(); ++m) f[m] = -j[m] * da[m];
    return trapezoid(f, h);
}

}  // namespace

TEST_SUITE("static_model") {
    TEST_CASE("Xi_N") {
        const auto s = make_prize(PowerPrize{0.5}, 12);
        CHECK(xi(s, 0.0) == doctest::Approx(1.0 / (11 * s.diffs()[0])).epsilon(1e-14));
        CHECK(xi(s, 1.0) == 0.0);
        CHECK_THROWS_AS((void)xi(s, 1.2), DomainError);
        const int n = 9;
        const auto lin = make_prize(PowerPrize{1.0}, n);
        for (double x : {0.0, 0.2, 0.5, 0.93}) {
            CHECK(xi(lin, x) == doctest::Approx((1.0 - std::pow(x, n - 1)) * n / (n - 1)).epsilon(1e-13));
        }
    }

    TEST_CASE("property: Xi_N positive on [0, 1) and zero at 1") {
        for (const auto& shape : std::vector<PrizeShape>{PowerPrize{0.3}, PowerPrize{2.5},
                                                          PolynomialPrize{{0.0, 1.0, -0.6, 0.5}}}) {
            for (int n : {2, 3, 30, 700}) {
                const auto s = make_prize(shape, n);
                for (int i = 0; i < 1000; ++i) CHECK(xi(s, i / 1000.0) > 0.0);
                CHECK(xi(s, 1.0) == 0.0);
            }
        }
    }

    TEST_CASE("ESS curve basics") {
        const auto s = make_prize(PowerPrize{0.5}, 25);
        const auto c = solve_ess_ode(s, 1e-4, 1e-12);
        CHECK(c.G.front() == 0.0);
        CHECK(c.t.front() == 0.0);
        CHECK((c.G[1] - c.G[0]) / c.step == doctest::Approx(1.0 / (24 * s.diffs()[0])).epsilon(1e-3));
        CHECK(c.tail_mass() < 1e-12);
        CHECK(c.t_max() > s.top());
        CHECK(c.cdf(c.t_max() + 1.0) > c.G.back());
        CHECK(c.cdf(0.0) == 0.0);
        CHECK(c.cdf(c.t[1234]) == c.G[1234]);
        CHECK(c.cdf(0.5 * (c.t[10] + c.t[11])) > c.G[10]);
        CHECK_THROWS_AS((void)solve_ess_ode(s, 0.0, 1e-12), InvalidParameter);
        CHECK_THROWS_AS((void)solve_ess_ode(s, 1e-3, 1.5), InvalidParameter);
    }

    TEST_CASE("large steps are detected and retried") {
        const auto s = make_prize(PowerPrize{1.0}, 30);
        CHECK_THROWS_AS((void)solve_ess_ode(s, 0.2, 1e-12), StepTooLarge);
        SolverOptions opts;
        opts.step = 0.2;
        const auto c = solve_ess_curve(s, opts);
        CHECK(c.step < 0.2);
        opts.max_halvings = 0;
        CHECK_THROWS_AS((void)solve_ess_curve(s, opts), StepTooLarge);
    }

    TEST_CASE("property: curves are monotone cdfs solving the ODE") {
        for (double a : {0.5, 1.0, 2.0}) {
            for (int n : {2, 5, 60}) {
                const auto& c = cached_curve(a, n);
                CHECK(c.G.front() == 0.0);
                for (std::size_t m = 0; m < c.size(); ++m) {
                    CHECK(c.G[m] >= 0.0);
                    CHECK(c.G[m] <= 1.0);
                    CHECK(c.g[m] >= 0.0);
                    if (m) CHECK(c.G[m] >= c.G[m - 1]);
                    CHECK(c.g[m] == c.rhs(c.G[m]));
                }
            }
        }
    }

    TEST_CASE("property: halving the step changes G by less than 1e-8") {
        for (double a : {0.5, 2.0}) {
            const auto s = make_prize(PowerPrize{a}, 20);
            const auto coarse = solve_ess_ode(s, 2e-4, 1e-12);
            const auto fine = solve_ess_ode(s, 1e-4, 1e-12);
            double worst = 0.0;
            for (std::size_t m = 0; m < coarse.size() && 2 * m < fine.size(); ++m) {
                worst = std::max(worst, std::abs(coarse.G[m] - fine.G[2 * m]));
            }
            CHECK(worst < 1e-8);
        }
    }

    TEST_CASE("convergence to the inverse prize") {
        CHECK(ess_limit_error(cached_curve(1.0, 200)) <= 0.02);
        for (double a : {0.5, 1.0, 2.0}) {
            const double e10 = ess_limit_error(cached_curve(a, 10));
            const double e50 = ess_limit_error(cached_curve(a, 50));
            const double e200 = ess_limit_error(cached_curve(a, 200));
            CHECK(e50 < e10);
            CHECK(e200 < e50);
        }
    }

    TEST_CASE("Q kernel against its binomial expansion") {
        for (double a : {0.5, 2.0}) {
            const auto& c = cached_curve(a, 7);
            const auto q = q_functional(c);
            const int n = 7;
            const auto cr = c.spec.diffs();
            for (std::size_t m = 0; m < c.size(); m += 97) {
                const double G = c.G[m];
                double ds = 0.0;
                for (int r = 0; r <= n - 3; ++r) {
                    ds += c.g[m] * std::pow(G, r) * std::pow(1.0 - G, n - 3 - r) *
                          (cr[r + 1] * binomial(n - 2, r + 1) * (r + 1) - cr[r] * binomial(n - 2, r) * (n - 2 - r));
                }
                const double displayed = 2.0 * std::pow(G, n - 2) + ds;
                CHECK(q.values[m] == doctest::Approx(0.5 * displayed).epsilon(1e-10).scale(1.0));
            }
        }
    }

    TEST_CASE("Q certificate signs") {
        const auto convex = q_functional(cached_curve(2.0, 25));
        CHECK(convex.min >= -1e-9);
        CHECK(std::abs(convex.values.back() - 1.0) <= 0.05);
        const auto concave = q_functional(cached_curve(0.5, 25));
        CHECK(concave.values.front() < 0.0);
        CHECK(std::abs(concave.values.back() - 1.0) <= 0.05);
        const auto linear = q_functional(cached_curve(1.0, 25));
        CHECK(linear.min >= -1e-12);
    }

    TEST_CASE("upsilon equals the payoff gap of a perturbed opponent") {
        for (double alpha : {0.5, 2.0}) {
            const auto& c = cached_curve(alpha, 5);
            const double t1 = 0.1, t2 = 0.6, eps = 2e-3;
            std::vector<double> a(c.size(), 0.0), da(c.size(), 0.0);
            for (std::size_t m = 0; m < c.size(); ++m) {
                const double t = c.t[m];
                if (t > t1 && t < t2) {
                    const double w = std::numbers::pi / (t2 - t1);
                    const double s = std::sin(w * (t - t1));
                    a[m] = eps * s * s;
                    da[m] = eps * 2.0 * s * std::cos(w * (t - t1)) * w;
                }
            }
            const double direct = payoff_gap(c, a, da);
            const double kernel = upsilon(c, a);
            CHECK(kernel == doctest::Approx(direct).epsilon(1e-4));
            if (alpha > 1.0) CHECK(kernel > 0.0);
        }
    }

    TEST_CASE("upsilon signs") {
        const auto& convex = cached_curve(2.0, 25);
        CHECK(upsilon(convex, std::vector<double>(convex.size(), 0.0)) == 0.0);
        std::vector<double> wave(convex.size());
        for (std::size_t m = 0; m < wave.size(); ++m) wave[m] = std::sin(7.0 * convex.t[m]) * std::exp(-convex.t[m]);
        CHECK(upsilon(convex, wave) >= 0.0);

        const auto& concave = cached_curve(0.5, 25);
        std::vector<double> near_zero(concave.size(), 0.0);
        for (std::size_t m = 0; m < near_zero.size(); ++m) {
            if (concave.t[m] < 0.002) near_zero[m] = 0.002 - concave.t[m];
        }
        CHECK(upsilon(concave, near_zero) < 0.0);
        CHECK_THROWS_AS((void)upsilon(concave, std::vector<double>(3, 1.0)), InvalidParameter);
    }

    TEST_CASE("pure-strategy payoff is the constant V_1") {
        for (double a : {0.5, 1.0, 2.0}) {
            for (int n : {2, 5, 25}) {
                const auto& c = cached_curve(a, n);
                CHECK(payoff_pure_vs_ess(c, 0.0) == doctest::Approx(c.spec.prize(1)).epsilon(1e-14));
                std::vector<double> xs;
                for (int i = 0; i < 200; ++i) xs.push_back(c.t_max() * i / 199.0);
                xs.push_back(0.123456789);
                const auto j = payoff_pure_vs_ess(c, xs);
                const auto [lo, hi] = std::minmax_element(j.begin(), j.end());
                CHECK(*hi - *lo <= 1e-6 * c.spec.prize(n));
                CHECK(j[199] == doctest::Approx(c.spec.prize(1)).epsilon(1e-6));
            }
        }
        CHECK_THROWS_AS((void)payoff_pure_vs_ess(cached_curve(1.0, 5), 1e6), DomainError);
    }

    TEST_CASE("gamma sum") {
        CHECK(gamma_sum(1, -1.0) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(gamma_sum(2, -1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
        auto brute = [](int q, double p) {
            double s = 0.0;
            for (int k = 0; k <= q; ++k) s += binomial(q, k) * (k % 2 ? -1.0 : 1.0) / (k - p);
            return s;
        };
        CHECK(gamma_sum(3, -0.5) == doctest::Approx(brute(3, -0.5)).epsilon(1e-12));
        CHECK(gamma_sum(5, 2.5) == doctest::Approx(brute(5, 2.5)).epsilon(1e-12));
        CHECK(gamma_sum(4, 1.3) == doctest::Approx(brute(4, 1.3)).epsilon(1e-12));
        CHECK(gamma_sum(0, -3.0) == doctest::Approx(brute(0, -3.0)).epsilon(1e-14));
        CHECK_THROWS_AS((void)gamma_sum(3, 2.0), InvalidParameter);
        CHECK_THROWS_AS((void)gamma_sum(3, 0.0), InvalidParameter);
    }

    TEST_CASE("Gamma identity collapses the binomial double sum") {
        for (int n : {4, 9, 31}) {
            for (int r = 0; r <= n - 4; ++r) {
                const double w = 0.5 * (n - 2) * (n - 3) * binomial(n - 4, r) * gamma_sum(n - 4 - r, -(3.0 + r));
                CHECK(w == doctest::Approx((r + 1.0) * (r + 2.0) / (2.0 * (n - 1))).epsilon(1e-11));
            }
        }
    }

    TEST_CASE("invasion gap: two routes agree") {
        for (double a : {0.5, 1.0, 1.5}) {
            for (int n : {5, 10, 20}) {
                const auto& c = cached_curve(a, n);
                const auto quad = delta_invasion_quadrature(c);
                const auto closed = delta_invasion_closed(c);
                CHECK(std::abs(quad.delta - closed.delta) <= 1e-6);
                CHECK(quad.method == InvasionMethod::quadrature);
                CHECK(closed.method == InvasionMethod::closed_form);
                CHECK(quad.delta == doctest::Approx(quad.payoff_gN - quad.payoff_delta0).epsilon(1e-15));
                CHECK(closed.delta == doctest::Approx(closed.A_N + closed.C_N).epsilon(1e-15));
                const double cn = -0.5 * (std::pow(1.0 / n, a) + std::pow(2.0 / n, a));
                CHECK(closed.C_N == doctest::Approx(cn).epsilon(1e-14));
            }
        }
    }

    TEST_CASE("invasion gap signs") {
        for (int n : {4, 10, 35}) CHECK(delta_invasion_closed(cached_curve(1.0, n)).delta > 0.0);
        CHECK(delta_invasion_closed(cached_curve(0.5, 35)).delta < 0.0);
        CHECK(delta_invasion_closed(cached_curve(1.5, 35)).delta > 0.0);
        CHECK(delta_invasion_quadrature(cached_curve(1.0, 3)).delta > 0.0);
        CHECK_THROWS_AS((void)delta_invasion_closed(cached_curve(1.0, 3)), InvalidParameter);
        CHECK_THROWS_AS((void)delta_invasion_quadrature(cached_curve(1.0, 2)), InvalidParameter);
    }

    TEST_CASE("invasion gap needs a converged tail") {
        const auto c = solve_ess_ode(make_prize(PowerPrize{1.0}, 10), 1e-3, 1e-4);
        CHECK_THROWS_AS((void)delta_invasion_quadrature(c), TailNotConverged);
        const auto coarse = solve_ess_ode(make_prize(PowerPrize{1.0}, 10), 1e-3, 0.05);
        CHECK_THROWS_AS((void)delta_invasion_closed(coarse), TailNotConverged);
        CHECK_NOTHROW((void)delta_invasion_closed(c));
    }

    TEST_CASE("A_N vanishes as N grows") {
        double previous = 1e9;
        for (int n : {10, 40, 160}) {
            const double a = std::abs(delta_invasion_closed(cached_curve(1.0, n)).A_N);
            CHECK(a < previous);
            previous = a;
        }
        CHECK(previous < 0.05);
    }

    TEST_CASE("rate fit") {
        const int ns[] = {20, 40, 80, 160};
        const auto lin = invasion_rate_fit(1.0, ns);
        CHECK(lin.slope_A == doctest::Approx(-1.0).epsilon(0.2));
        CHECK(lin.slope_C == doctest::Approx(-1.0).epsilon(1e-9));
        const auto sq = invasion_rate_fit(0.5, ns);
        CHECK(std::abs(sq.slope_C + 0.5) <= 0.1);
        CHECK(sq.N.size() == 4);
        CHECK_THROWS_AS((void)invasion_rate_fit(1.5, ns), InvalidParameter);
        const int few[] = {20, 40, 80};
        CHECK_THROWS_AS((void)invasion_rate_fit(0.5, few), InvalidParameter);
        const int unsorted[] = {20, 80, 40, 160};
        CHECK_THROWS_AS((void)invasion_rate_fit(0.5, unsorted), InvalidParameter);
    }

    TEST_CASE("smallest invadable N") {
        const auto n = smallest_invadable_n(0.5, 4, 35);
        REQUIRE(n.has_value());
        CHECK(delta_invasion_closed(cached_curve(0.5, *n)).delta < 0.0);
        if (*n > 4) CHECK(delta_invasion_closed(cached_curve(0.5, *n - 1)).delta >= 0.0);
        CHECK_FALSE(smallest_invadable_n(1.0, 4, 20).has_value());
    }
}
