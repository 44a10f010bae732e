#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "attrition/prize.hpp"

namespace attrition {

/// Holding rates of the pure-birth chain counting quitters.
///
/// rates[k-1] = lambda_k for k = 1..N, with lambda_N = 0 (absorbing final state).
struct RateSequence {
    std::vector<double> rates;
    /// Smallest |lambda_i - lambda_j| / max(lambda_i, lambda_j) over i != j, including lambda_N.
    double min_relative_gap = 0.0;
    /// min_relative_gap > kDistinctRateGap, the precondition of every partial-fraction formula.
    bool distinct = false;

    [[nodiscard]] int players() const noexcept { return static_cast<int>(rates.size()); }
};

inline constexpr double kDistinctRateGap = 1e-9;
/// Above this N the state probabilities always come from the forward equations.
inline constexpr int kClosedFormMaxPlayers = 40;

/// Probabilities p_i(t) = P{X(t) = (i-1)/N}, stored zero-based: probs[i-1] = p_i.
struct StateDistribution {
    double t = 0.0;
    std::vector<double> probs;
};

struct TransitionMatrix {
    double t = 0.0;
    Eigen::MatrixXd entries;
};

enum class ProbabilityMethod {
    automatic,        ///< partial fractions when well conditioned, forward equations otherwise
    closed_form,      ///< partial fractions; throws DegenerateRates if rates are not distinct
    forward_equation  ///< adaptive Runge-Kutta on the Kolmogorov forward equations
};

/// lambda_k = (N-k+1) / ((N-k)(V_{k+1} - V_k)), lambda_N = 0.
[[nodiscard]] RateSequence ess_rates(const PrizeSpec& spec);

/// Builds a RateSequence from arbitrary rates (last entry must be 0).
[[nodiscard]] RateSequence make_rate_sequence(std::vector<double> rates);

/// Density of a sum of independent exponentials with distinct rates.
[[nodiscard]] double hypoexp_density(std::span<const double> rates, double t);

[[nodiscard]] StateDistribution state_probs(const RateSequence& rseq, double t,
                                            ProbabilityMethod method = ProbabilityMethod::automatic);

/// state_probs on a whole time grid (any order); the forward-equation path integrates once.
[[nodiscard]] std::vector<StateDistribution> state_probs_series(
    const RateSequence& rseq, std::span<const double> times,
    ProbabilityMethod method = ProbabilityMethod::automatic);

/// True when the automatic method would use partial fractions for this chain.
[[nodiscard]] bool uses_closed_form(const RateSequence& rseq);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of X(t) = (i-1)/N under the given state distribution.
[[nodiscard]] Moments moments_of_X(const StateDistribution& dist);
[[nodiscard]] double expectation_X(const RateSequence& rseq, double t);
[[nodiscard]] double variance_X(const RateSequence& rseq, double t);

/// The two partial sums of E[V(X(t))]: states i/N with i <= floor((1-eps)N) (lower) and the rest.
struct SplitExpectation {
    double lower = 0.0;
    double upper = 0.0;
};
[[nodiscard]] SplitExpectation expectation_V_X(const RateSequence& rseq, const PrizeSpec& spec, double t,
                                               double epsilon);
[[nodiscard]] SplitExpectation expectation_V_X(const StateDistribution& dist, const PrizeSpec& spec, double epsilon);

/// Expected total duration T_N = sum_k (N-k)/(N-k+1) (V_{k+1} - V_k).
[[nodiscard]] double expected_duration(const PrizeSpec& spec);

/// P(t) through the eigen-decomposition P = V A(t); forward equations when degenerate.
[[nodiscard]] TransitionMatrix transition_matrix(const RateSequence& rseq, double t,
                                                 ProbabilityMethod method = ProbabilityMethod::automatic);

/// Intensity matrix Q of the chain.
[[nodiscard]] Eigen::MatrixXd intensity_matrix(const RateSequence& rseq);

}  // namespace attrition
