#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "attrition/prize.hpp"
#include "attrition/rng.hpp"
#include "attrition/static_model.hpp"

namespace attrition {

enum class DensityKind { exponential, half_normal, shifted_family };
[[nodiscard]] const char* to_string(DensityKind kind) noexcept;

/// Waiting-time density used by every player in a round.
///
/// exponential: f(t) = rate e^{-rate t}. half_normal: f(t) = sqrt(2/pi)/scale e^{-t^2/(2 scale^2)}.
/// shifted_family: the base kind with a per-round parameter; round i uses
/// round_parameters[min(i, size) - 1].
class StrategyDensity {
public:
    [[nodiscard]] static StrategyDensity exponential(double rate);
    [[nodiscard]] static StrategyDensity half_normal(double scale);
    /// Half-normal whose density at 0 equals `density_at_zero`.
    [[nodiscard]] static StrategyDensity half_normal_matched(double density_at_zero);
    [[nodiscard]] static StrategyDensity shifted_family(DensityKind base, std::vector<double> round_parameters);

    [[nodiscard]] DensityKind kind() const noexcept { return kind_; }
    [[nodiscard]] DensityKind base_kind() const noexcept { return base_; }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }

    [[nodiscard]] double density(double tau, int round = 1) const;
    [[nodiscard]] double survival(double tau, int round = 1) const;
    [[nodiscard]] double density_at_zero(int round = 1) const { return density(0.0, round); }
    /// Minimum of `count` independent draws, by inversion of the survival function S^count.
    [[nodiscard]] double sample_min(double u, int count, int round = 1) const;

private:
    StrategyDensity(DensityKind kind, DensityKind base, std::vector<double> params);
    [[nodiscard]] double parameter(int round) const;

    DensityKind kind_;
    DensityKind base_;
    std::vector<double> params_;
};

/// Density of the first order statistic of `count` draws: count f S^{count-1}.
[[nodiscard]] double order_stat_density(const StrategyDensity& strategy, int count, double tau, int round = 1);

/// Seeded Monte Carlo result; every statistic is a named column or scalar.
struct SimRun {
    std::uint64_t seed = 0;
    long long replicates = 0;
    int N = 0;
    std::map<std::string, std::vector<double>> outputs;

    [[nodiscard]] const std::vector<double>& column(const std::string& name) const { return outputs.at(name); }
    [[nodiscard]] double scalar(const std::string& name) const { return outputs.at(name).at(0); }
};

/// Realizes the dynamic game: round k lasts Exp(lambda_k) (the minimum of N - k + 1 ESS draws).
///
/// Columns: t, emp_E_X, emp_Var_X, ci (99% half-width of emp_E_X), state_freq (row-major,
/// one row of N frequencies per time), first_quit_mean. Scalars: duration_mean, duration_ci.
[[nodiscard]] SimRun simulate_dynamic_game(const PrizeSpec& spec, std::span<const double> times,
                                           std::uint64_t seed, long long replicates);

enum class StreamCoupling { independent, common };
[[nodiscard]] const char* to_string(StreamCoupling c) noexcept;

struct IndistinguishabilityRow {
    int N = 0;
    long long exceed = 0;
    double exceedance = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double sum_var_alpha = 0.0;  ///< sum over rounds of the empirical Var(T_i^alpha)
    double sum_var_beta = 0.0;
};

struct IndistinguishabilityResult {
    std::uint64_t seed = 0;
    long long replicates = 0;
    double q = 0.0;
    double delta = 0.0;
    StreamCoupling coupling = StreamCoupling::independent;
    std::vector<IndistinguishabilityRow> rows;
};

inline constexpr double kMatchAtZeroTolerance = 1e-9;

/// Empirical P{|S_q^alpha - S_q^beta| >= delta} with 95% Wilson intervals, one row per N.
[[nodiscard]] IndistinguishabilityResult theorem2_experiment(const StrategyDensity& alpha, const StrategyDensity& beta, double q,
                                                 std::span<const int> n_list, double delta, std::uint64_t seed,
                                                 long long replicates,
                                                 StreamCoupling coupling = StreamCoupling::independent);

/// Inverse of the curve's cdf (linear between nodes, exponential tail past t_max).
[[nodiscard]] double ess_quantile(const EssCurve& curve, double u);

/// `count` independent draws from G_N.
[[nodiscard]] std::vector<double> sample_ess_times(const EssCurve& curve, std::uint64_t seed, long long count);

/// One-shot game with N players drawing from G_N. Columns: rank_payoff (N entries).
/// Scalars: mean_payoff, mean_payoff_se, mean_payoff_ci (95% half-width).
[[nodiscard]] SimRun sample_static_game(const EssCurve& curve, std::uint64_t seed, long long replicates);

}  // namespace attrition
