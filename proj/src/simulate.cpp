#include "attrition/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "attrition/dynamic_model.hpp"
#include "attrition/errors.hpp"
#include "attrition/numerics.hpp"
#include "attrition/parallel.hpp"

namespace attrition {

namespace {

constexpr long long kChunk = 4096;

std::size_t chunk_count(long long replicates) {
    return static_cast<std::size_t>((replicates + kChunk - 1) / kChunk);
}

std::pair<long long, long long> chunk_range(std::size_t c, long long replicates) {
    const long long lo = static_cast<long long>(c) * kChunk;
    return {lo, std::min(lo + kChunk, replicates)};
}

void require_replicates(long long replicates) {
    if (replicates < 1) throw InvalidParameter("replicates must be at least 1");
}

struct MomentSums {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
    }
    void merge(const MomentSums& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    [[nodiscard]] double mean(long long n) const { return sum / static_cast<double>(n); }
    [[nodiscard]] double variance(long long n) const {
        if (n < 2) return 0.0;
        const double m = mean(n);
        return std::max(0.0, (sum_sq - n * m * m) / static_cast<double>(n - 1));
    }
};

}  // namespace

const char* to_string(DensityKind kind) noexcept {
    switch (kind) {
        case DensityKind::exponential: return "exponential";
        case DensityKind::half_normal: return "half_normal";
        case DensityKind::shifted_family: return "shifted_family";
    }
    return "?";
}

const char* to_string(StreamCoupling c) noexcept {
    return c == StreamCoupling::common ? "common" : "independent";
}

StrategyDensity::StrategyDensity(DensityKind kind, DensityKind base, std::vector<double> params)
    : kind_(kind), base_(base), params_(std::move(params)) {
    if (params_.empty()) throw InvalidParameter("strategy density needs a parameter");
    for (double p : params_) {
        if (!(p > 0.0 && std::isfinite(p))) throw InvalidParameter("strategy parameters must be positive");
    }
}

StrategyDensity StrategyDensity::exponential(double rate) {
    return {DensityKind::exponential, DensityKind::exponential, {rate}};
}

StrategyDensity StrategyDensity::half_normal(double scale) {
    return {DensityKind::half_normal, DensityKind::half_normal, {scale}};
}

StrategyDensity StrategyDensity::half_normal_matched(double density_at_zero) {
    if (!(density_at_zero > 0.0)) throw InvalidParameter("density at zero must be positive");
    return half_normal(std::sqrt(2.0 / std::numbers::pi) / density_at_zero);
}

StrategyDensity StrategyDensity::shifted_family(DensityKind base, std::vector<double> round_parameters) {
    if (base == DensityKind::shifted_family) throw InvalidParameter("shifted family needs a plain base kind");
    return {DensityKind::shifted_family, base, std::move(round_parameters)};
}

double StrategyDensity::parameter(int round) const {
    if (round < 1) throw InvalidParameter("round index starts at 1");
    const auto i = std::min(static_cast<std::size_t>(round), params_.size()) - 1;
    return params_[i];
}

double StrategyDensity::density(double tau, int round) const {
    if (tau < 0.0) return 0.0;
    const double p = parameter(round);
    if (base_ == DensityKind::exponential) return p * std::exp(-p * tau);
    const double z = tau / p;
    return std::sqrt(2.0 / std::numbers::pi) / p * std::exp(-0.5 * z * z);
}

double StrategyDensity::survival(double tau, int round) const {
    if (tau <= 0.0) return 1.0;
    const double p = parameter(round);
    if (base_ == DensityKind::exponential) return std::exp(-p * tau);
    return std::erfc(tau / (p * std::numbers::sqrt2));
}

double StrategyDensity::sample_min(double u, int count, int round) const {
    if (count < 1) throw InvalidParameter("order statistic needs count >= 1");
    const double p = parameter(round);
    const double log_s = std::log1p(-u) / count;
    if (base_ == DensityKind::exponential) return -log_s / p;
    return p * std::numbers::sqrt2 * boost::math::erfc_inv(std::exp(log_s));
}

double order_stat_density(const StrategyDensity& strategy, int count, double tau, int round) {
    if (count < 1) throw InvalidParameter("order statistic needs count >= 1");
    if (tau < 0.0) return 0.0;
    const double s = strategy.survival(tau, round);
    return count * strategy.density(tau, round) * std::pow(s, count - 1);
}

SimRun simulate_dynamic_game(const PrizeSpec& spec, std::span<const double> times, std::uint64_t seed,
                             long long replicates) {
    require_replicates(replicates);
    if (times.empty()) throw InvalidParameter("simulation needs at least one time");
    for (double t : times) {
        if (!(t >= 0.0)) throw InvalidParameter("simulation times must be nonnegative");
    }
    const auto rseq = ess_rates(spec);
    const int n = spec.players();
    const auto nt = times.size();
    const auto states = static_cast<std::size_t>(n);

    struct Partial {
        std::vector<long long> counts;
        MomentSums duration;
        MomentSums first_quit;
    };
    std::vector<Partial> partial(chunk_count(replicates));
    parallel_for(partial.size(), [&](std::size_t c) {
        auto& acc = partial[c];
        acc.counts.assign(nt * states, 0);
        std::vector<double> jumps(states - 1);
        const auto [lo, hi] = chunk_range(c, replicates);
        for (long long r = lo; r < hi; ++r) {
            CounterRng rng(seed, static_cast<std::uint64_t>(r));
            double clock = 0.0;
            for (std::size_t k = 0; k + 1 < states; ++k) {
                clock += -std::log1p(-rng.uniform()) / rseq.rates[k];
                jumps[k] = clock;
            }
            acc.duration.add(clock);
            acc.first_quit.add(jumps.front());
            for (std::size_t j = 0; j < nt; ++j) {
                const auto quit = static_cast<std::size_t>(
                    std::upper_bound(jumps.begin(), jumps.end(), times[j]) - jumps.begin());
                ++acc.counts[j * states + quit];
            }
        }
    });

    std::vector<long long> counts(nt * states, 0);
    MomentSums duration, first_quit;
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p.counts[i];
        duration.merge(p.duration);
        first_quit.merge(p.first_quit);
    }

    const double reps = static_cast<double>(replicates);
    const double z99 = normal_quantile(0.995);
    const double z95 = normal_quantile(0.975);
    SimRun run{seed, replicates, n, {}};
    auto& out = run.outputs;
    out["t"].assign(times.begin(), times.end());
    auto& mean = out["emp_E_X"];
    auto& var = out["emp_Var_X"];
    auto& ci = out["ci"];
    auto& freq = out["state_freq"];
    freq.resize(nt * states);
    for (std::size_t j = 0; j < nt; ++j) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < states; ++i) {
            const double f = static_cast<double>(counts[j * states + i]) / reps;
            const double x = static_cast<double>(i) / n;
            freq[j * states + i] = f;
            m += f * x;
            m2 += f * x * x;
        }
        const double v = replicates > 1 ? std::max(0.0, m2 - m * m) * reps / (reps - 1.0) : 0.0;
        mean.push_back(m);
        var.push_back(v);
        ci.push_back(z99 * std::sqrt(v / reps));
    }
    out["duration_mean"] = {duration.mean(replicates)};
    out["duration_ci"] = {z95 * std::sqrt(duration.variance(replicates) / reps)};
    out["first_quit_mean"] = {first_quit.mean(replicates)};
    return run;
}

IndistinguishabilityResult theorem2_experiment(const StrategyDensity& alpha, const StrategyDensity& beta, double q,
                                   std::span<const int> n_list, double delta, std::uint64_t seed,
                                   long long replicates, StreamCoupling coupling) {
    require_replicates(replicates);
    if (!(q > 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in (0, 1]");
    if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");
    if (n_list.empty()) throw InvalidParameter("theorem2 needs at least one N");
    const int max_n = *std::max_element(n_list.begin(), n_list.end());
    if (*std::min_element(n_list.begin(), n_list.end()) < 1) throw InvalidParameter("N must be positive");
    for (int i = 1; i <= max_n; ++i) {
        const double fa = alpha.density_at_zero(i);
        const double fb = beta.density_at_zero(i);
        if (std::abs(fa - fb) > kMatchAtZeroTolerance * std::max(1.0, std::abs(fa))) {
            throw MismatchedAtZero("densities differ at 0 in round " + std::to_string(i));
        }
    }

    IndistinguishabilityResult result{seed, replicates, q, delta, coupling, {}};
    const double z95 = normal_quantile(0.975);
    for (int n : n_list) {
        const int rounds = static_cast<int>(std::floor(q * n + 1e-9));
        const auto nr = static_cast<std::size_t>(rounds);
        struct Partial {
            long long exceed = 0;
            std::vector<MomentSums> ta, tb;
        };
        std::vector<Partial> partial(chunk_count(replicates));
        parallel_for(partial.size(), [&](std::size_t c) {
            auto& acc = partial[c];
            acc.ta.assign(nr, {});
            acc.tb.assign(nr, {});
            const auto [lo, hi] = chunk_range(c, replicates);
            for (long long r = lo; r < hi; ++r) {
                const auto base = substream(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
                CounterRng rng_a(seed, substream(base, 0));
                CounterRng rng_b(seed, substream(base, coupling == StreamCoupling::common ? 0 : 1));
                double sa = 0.0, sb = 0.0;
                for (int i = 1; i <= rounds; ++i) {
                    const double ta = alpha.sample_min(rng_a.uniform(), n - i + 1, i);
                    const double tb = beta.sample_min(rng_b.uniform(), n - i + 1, i);
                    acc.ta[static_cast<std::size_t>(i - 1)].add(ta);
                    acc.tb[static_cast<std::size_t>(i - 1)].add(tb);
                    sa += ta;
                    sb += tb;
                }
                if (std::abs(sa - sb) >= delta) ++acc.exceed;
            }
        });

        IndistinguishabilityRow row;
        row.N = n;
        std::vector<MomentSums> ta(nr), tb(nr);
        for (const auto& p : partial) {
            row.exceed += p.exceed;
            for (std::size_t i = 0; i < nr; ++i) {
                ta[i].merge(p.ta[i]);
                tb[i].merge(p.tb[i]);
            }
        }
        for (std::size_t i = 0; i < nr; ++i) {
            row.sum_var_alpha += ta[i].variance(replicates);
            row.sum_var_beta += tb[i].variance(replicates);
        }
        row.exceedance = static_cast<double>(row.exceed) / static_cast<double>(replicates);
        std::tie(row.ci_lo, row.ci_hi) = wilson_interval(row.exceed, replicates, z95);
        result.rows.push_back(row);
    }
    return result;
}

double ess_quantile(const EssCurve& curve, double u) {
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("quantile level must lie in [0, 1)");
    if (u == 0.0) return 0.0;
    if (u >= curve.G.back()) {
        return curve.t_max() + std::log(curve.tail_mass() / (1.0 - u)) / curve.rhs.decay_rate();
    }
    const auto idx = static_cast<std::size_t>(std::upper_bound(curve.G.begin(), curve.G.end(), u) - curve.G.begin());
    const double g0 = curve.G[idx - 1];
    const double g1 = curve.G[idx];
    return curve.t[idx - 1] + curve.step * (u - g0) / (g1 - g0);
}

std::vector<double> sample_ess_times(const EssCurve& curve, std::uint64_t seed, long long count) {
    require_replicates(count);
    std::vector<double> out(static_cast<std::size_t>(count));
    parallel_for(chunk_count(count), [&](std::size_t c) {
        const auto [lo, hi] = chunk_range(c, count);
        for (long long r = lo; r < hi; ++r) {
            CounterRng rng(seed, static_cast<std::uint64_t>(r));
            out[static_cast<std::size_t>(r)] = ess_quantile(curve, rng.uniform());
        }
    });
    return out;
}

SimRun sample_static_game(const EssCurve& curve, std::uint64_t seed, long long replicates) {
    require_replicates(replicates);
    const auto& spec = curve.spec;
    const int n = spec.players();
    const auto players = static_cast<std::size_t>(n);

    struct Partial {
        std::vector<double> rank_sum;
        MomentSums mean_payoff;
    };
    std::vector<Partial> partial(chunk_count(replicates));
    parallel_for(partial.size(), [&](std::size_t c) {
        auto& acc = partial[c];
        acc.rank_sum.assign(players, 0.0);
        std::vector<double> wait(players);
        std::vector<std::size_t> order(players);
        const auto [lo, hi] = chunk_range(c, replicates);
        for (long long r = lo; r < hi; ++r) {
            CounterRng rng(seed, static_cast<std::uint64_t>(r));
            for (auto& w : wait) w = ess_quantile(curve, rng.uniform());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return wait[a] < wait[b] || (wait[a] == wait[b] && a < b);
            });
            double total = 0.0;
            for (std::size_t k = 0; k < players; ++k) {
                const double paid = k + 1 < players ? wait[order[k]] : wait[order[k - 1]];
                const double payoff = spec.prize(static_cast<int>(k) + 1) - paid;
                acc.rank_sum[k] += payoff;
                total += payoff;
            }
            acc.mean_payoff.add(total / n);
        }
    });

    std::vector<double> rank(players, 0.0);
    MomentSums mean_payoff;
    for (const auto& p : partial) {
        for (std::size_t k = 0; k < players; ++k) rank[k] += p.rank_sum[k];
        mean_payoff.merge(p.mean_payoff);
    }
    const double reps = static_cast<double>(replicates);
    for (auto& x : rank) x /= reps;
    const double se = std::sqrt(mean_payoff.variance(replicates) / reps);

    SimRun run{seed, replicates, n, {}};
    run.outputs["rank_payoff"] = std::move(rank);
    run.outputs["mean_payoff"] = {mean_payoff.mean(replicates)};
    run.outputs["mean_payoff_se"] = {se};
    run.outputs["mean_payoff_ci"] = {normal_quantile(0.975) * se};
    return run;
}

}  // namespace attrition
