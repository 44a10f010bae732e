#include "attrition/dynamic_model.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "attrition/errors.hpp"

namespace attrition {

namespace {

// Largest tolerated rounding estimate for a partial-fraction probability before
// the automatic path switches to the forward equations.
constexpr long double kCancellationLimit = 1e-12L;
constexpr double kNegativeClamp = 1e-12;
constexpr double kForwardAbsTol = 1e-13;
constexpr double kForwardRelTol = 1e-10;

using State = std::vector<double>;

/// Partial-fraction sum with its rounding estimate.
struct Accumulated {
    long double value = 0.0L;
    long double magnitude = 0.0L;  // sum of |terms|
    long double exponent = 0.0L;   // largest |log-domain exponent| among the terms
    int terms = 0;

    void add(long double term, long double log_magnitude) {
        value += term;
        magnitude += std::abs(term);
        exponent = std::max(exponent, std::abs(log_magnitude));
        ++terms;
    }

    [[nodiscard]] long double error_estimate() const {
        return magnitude * (4.0L * terms + 16.0L + 4.0L * exponent) * LDBL_EPSILON;
    }
};

double clamp_probability(long double v, const char* what, long double allowance = 0.0L) {
    if (v < 0.0L) {
        if (v < -std::max(static_cast<long double>(kNegativeClamp), allowance)) {
            std::ostringstream os;
            os << what << " evaluated to " << static_cast<double>(v) << " (cancellation)";
            throw NumericalFailure(os.str());
        }
        return 0.0;
    }
    return static_cast<double>(v);
}

void require_distinct(const RateSequence& rseq) {
    if (!rseq.distinct) {
        std::ostringstream os;
        os << "rates closer than relative gap " << kDistinctRateGap << " (min gap " << rseq.min_relative_gap << ")";
        throw DegenerateRates(os.str());
    }
}

double min_relative_gap(std::vector<double> rates) {
    std::sort(rates.begin(), rates.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rates.size(); ++i) {
        const double scale = std::max(std::abs(rates[i]), std::abs(rates[i - 1]));
        gap = std::min(gap, scale > 0.0 ? (rates[i] - rates[i - 1]) / scale : 0.0);
    }
    return gap;
}

/// Kolmogorov forward equations for a row vector p: p' = p Q.
struct ForwardSystem {
    const std::vector<double>* rates;

    void operator()(const State& p, State& dp, double /*t*/) const {
        const auto& lam = *rates;
        dp[0] = -lam[0] * p[0];
        for (std::size_t i = 1; i < p.size(); ++i) dp[i] = lam[i - 1] * p[i - 1] - lam[i] * p[i];
    }
};

/// Integrates the forward equations from `initial` at t = 0 and records the state at each time.
std::vector<State> integrate_forward(const RateSequence& rseq, State initial, std::span<const double> times) {
    namespace odeint = boost::numeric::odeint;
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });

    std::vector<State> out(times.size());
    ForwardSystem system{&rseq.rates};
    auto stepper = odeint::make_controlled(kForwardAbsTol, kForwardRelTol, odeint::runge_kutta_dopri5<State>());

    State p = std::move(initial);
    double now = 0.0;
    const double lam_max = *std::max_element(rseq.rates.begin(), rseq.rates.end());
    for (auto idx : order) {
        const double target = times[idx];
        if (target < 0.0) throw DomainError("time must be nonnegative");
        if (target > now) {
            const double dt0 = std::min(target - now, lam_max > 0.0 ? 0.1 / lam_max : target - now);
            odeint::integrate_adaptive(stepper, system, p, now, target, dt0);
            now = target;
        }
        out[idx] = p;
    }
    for (auto& row : out) {
        for (double& v : row) v = clamp_probability(v, "forward-equation probability");
    }
    return out;
}

/// p_i(t) for i = 1..N by partial fractions; returns false if cancellation is too large.
bool closed_form_probs(const RateSequence& rseq, double t, std::vector<double>& probs, bool strict) {
    const auto n = rseq.rates.size();
    const auto& lam = rseq.rates;
    probs.assign(n, 0.0);

    // Running log|prod_{k<=i, k!=l} (lambda_k - lambda_l)| and its sign, per l.
    std::vector<long double> log_den(n, 0.0L);
    std::vector<int> sign_den(n, 1);
    long double log_num = 0.0L;  // log prod_{k<i} lambda_k

    probs[0] = static_cast<double>(std::exp(-static_cast<long double>(lam[0]) * t));
    for (std::size_t i = 1; i < n; ++i) {
        log_num += std::log(static_cast<long double>(lam[i - 1]));
        // Extend the denominators with the new index i.
        long double new_log = 0.0L;
        int new_sign = 1;
        for (std::size_t l = 0; l < i; ++l) {
            const long double d = static_cast<long double>(lam[i]) - lam[l];
            log_den[l] += std::log(std::abs(d));
            if (d < 0) sign_den[l] = -sign_den[l];
            const long double e = static_cast<long double>(lam[l]) - lam[i];
            new_log += std::log(std::abs(e));
            if (e < 0) new_sign = -new_sign;
        }
        log_den[i] = new_log;
        sign_den[i] = new_sign;

        Accumulated acc;
        for (std::size_t l = 0; l <= i; ++l) {
            const long double e = log_num - log_den[l] - static_cast<long double>(lam[l]) * t;
            acc.add(sign_den[l] * std::exp(e), e);
        }
        if (acc.error_estimate() > kCancellationLimit && !strict) return false;
        probs[i] = clamp_probability(acc.value, "partial-fraction probability");
    }
    return true;
}

bool closed_form_matrix(const RateSequence& rseq, double t, Eigen::MatrixXd& out, bool strict) {
    const auto n = static_cast<Eigen::Index>(rseq.rates.size());
    const auto& lam = rseq.rates;
    using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

    // Right eigenvectors (columns) and the coefficients of A(t) = V^{-1} P(t).
    MatrixL vecs = MatrixL::Identity(n, n);
    MatrixL coeff = MatrixL::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        long double log_mag = 0.0L;
        int sign = 1;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            // v_ij = prod_{k=i}^{j-1} lambda_k / (lambda_k - lambda_j)
            long double lv = 0.0L;
            int sv = 1;
            for (Eigen::Index k = i; k < j; ++k) {
                const long double d = static_cast<long double>(lam[k]) - lam[j];
                lv += std::log(static_cast<long double>(lam[k])) - std::log(std::abs(d));
                if (d < 0) sv = -sv;
            }
            vecs(i, j) = sv * std::exp(lv);
            // a_ij = (-1)^{i+j} prod_{k=i}^{j-1} lambda_k / prod_{k=i+1}^{j} (lambda_i - lambda_k)
            const long double d = static_cast<long double>(lam[i]) - lam[j];
            log_mag += std::log(static_cast<long double>(lam[j - 1])) - std::log(std::abs(d));
            if (d < 0) sign = -sign;
            const int parity = ((i + j) % 2 == 0) ? 1 : -1;
            coeff(i, j) = parity * sign * std::exp(log_mag);
        }
    }

    out.resize(n, n);
    long double worst = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            Accumulated acc;
            for (Eigen::Index m = i; m <= j; ++m) {
                const long double e = -static_cast<long double>(lam[m]) * t;
                acc.add(vecs(i, m) * coeff(m, j) * std::exp(e), e);
            }
            worst = std::max(worst, acc.error_estimate());
            out(i, j) = j < i ? 0.0 : static_cast<double>(acc.value);
        }
    }
    if (worst > kCancellationLimit && !strict) return false;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) out(i, j) = clamp_probability(out(i, j), "transition probability");
    }
    return true;
}

std::vector<double> unit_vector(std::size_t n, std::size_t i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    return e;
}

}  // namespace

RateSequence make_rate_sequence(std::vector<double> rates) {
    if (rates.size() < 2) throw InvalidParameter("a birth chain needs at least two states");
    if (rates.back() != 0.0) throw InvalidParameter("the final state must be absorbing (rate 0)");
    for (std::size_t k = 0; k + 1 < rates.size(); ++k) {
        if (!(rates[k] > 0.0) || !std::isfinite(rates[k])) throw InvalidParameter("transient rates must be positive");
    }
    RateSequence out;
    out.min_relative_gap = min_relative_gap(rates);
    out.distinct = out.min_relative_gap > kDistinctRateGap;
    out.rates = std::move(rates);
    return out;
}

RateSequence ess_rates(const PrizeSpec& spec) {
    const int n = spec.players();
    const auto c = spec.diffs();
    std::vector<double> rates(static_cast<std::size_t>(n), 0.0);
    for (int k = 1; k < n; ++k) {
        rates[static_cast<std::size_t>(k - 1)] =
            static_cast<double>(n - k + 1) / (static_cast<double>(n - k) * c[static_cast<std::size_t>(k - 1)]);
    }
    return make_rate_sequence(std::move(rates));
}

double hypoexp_density(std::span<const double> rates, double t) {
    if (rates.empty()) throw InvalidParameter("hypoexponential density needs at least one rate");
    if (t < 0.0) return 0.0;
    for (double r : rates) {
        if (!(r > 0.0)) throw InvalidParameter("hypoexponential rates must be positive");
    }
    if (rates.size() > 1 && min_relative_gap({rates.begin(), rates.end()}) <= kDistinctRateGap) {
        throw DegenerateRates("hypoexponential rates must be pairwise distinct");
    }

    long double log_num = 0.0L;
    for (double r : rates) log_num += std::log(static_cast<long double>(r));
    Accumulated acc;
    for (std::size_t l = 0; l < rates.size(); ++l) {
        long double log_den = 0.0L;
        int sign = 1;
        for (std::size_t k = 0; k < rates.size(); ++k) {
            if (k == l) continue;
            const long double d = static_cast<long double>(rates[k]) - rates[l];
            log_den += std::log(std::abs(d));
            if (d < 0) sign = -sign;
        }
        const long double e = log_num - log_den - static_cast<long double>(rates[l]) * t;
        acc.add(sign * std::exp(e), e);
    }
    return clamp_probability(acc.value, "hypoexponential density", acc.error_estimate());
}

bool uses_closed_form(const RateSequence& rseq) {
    return rseq.distinct && rseq.players() <= kClosedFormMaxPlayers;
}

std::vector<StateDistribution> state_probs_series(const RateSequence& rseq, std::span<const double> times,
                                                  ProbabilityMethod method) {
    for (double t : times) {
        if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
    }
    std::vector<StateDistribution> out(times.size());
    const auto n = rseq.rates.size();

    std::vector<std::size_t> pending;
    if (method == ProbabilityMethod::forward_equation ||
        (method == ProbabilityMethod::automatic && !uses_closed_form(rseq))) {
        pending.resize(times.size());
        std::iota(pending.begin(), pending.end(), 0);
    } else {
        if (method == ProbabilityMethod::closed_form) require_distinct(rseq);
        const bool strict = method == ProbabilityMethod::closed_form;
        for (std::size_t i = 0; i < times.size(); ++i) {
            out[i].t = times[i];
            if (!closed_form_probs(rseq, times[i], out[i].probs, strict)) pending.push_back(i);
        }
    }
    if (!pending.empty()) {
        std::vector<double> sub;
        for (auto i : pending) sub.push_back(times[i]);
        auto rows = integrate_forward(rseq, unit_vector(n, 0), sub);
        for (std::size_t j = 0; j < pending.size(); ++j) {
            out[pending[j]].t = times[pending[j]];
            out[pending[j]].probs = std::move(rows[j]);
        }
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == 0.0) out[i].probs = unit_vector(n, 0);
    }
    return out;
}

StateDistribution state_probs(const RateSequence& rseq, double t, ProbabilityMethod method) {
    const double times[] = {t};
    return std::move(state_probs_series(rseq, times, method).front());
}

Moments moments_of_X(const StateDistribution& dist) {
    const auto n = static_cast<double>(dist.probs.size());
    long double m1 = 0.0L, m2 = 0.0L;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        const long double x = static_cast<long double>(i) / n;
        m1 += x * dist.probs[i];
        m2 += x * x * dist.probs[i];
    }
    const double mean = static_cast<double>(m1);
    return {mean, std::max(0.0, static_cast<double>(m2 - m1 * m1))};
}

double expectation_X(const RateSequence& rseq, double t) { return moments_of_X(state_probs(rseq, t)).mean; }

double variance_X(const RateSequence& rseq, double t) { return moments_of_X(state_probs(rseq, t)).variance; }

SplitExpectation expectation_V_X(const StateDistribution& dist, const PrizeSpec& spec, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameter("epsilon must lie in (0, 1)");
    const int n = spec.players();
    if (static_cast<int>(dist.probs.size()) != n) throw InvalidParameter("prize and distribution disagree on N");
    const int split = static_cast<int>(std::floor((1.0 - epsilon) * n + 1e-9));
    SplitExpectation out;
    // State i/N is probs[i]; V(i/N) = V_i.
    for (int i = 1; i <= n - 1; ++i) {
        const double term = spec.prize(i) * dist.probs[static_cast<std::size_t>(i)];
        (i <= split ? out.lower : out.upper) += term;
    }
    return out;
}

SplitExpectation expectation_V_X(const RateSequence& rseq, const PrizeSpec& spec, double t, double epsilon) {
    if (spec.players() != rseq.players()) throw InvalidParameter("prize and rate sequence disagree on N");
    return expectation_V_X(state_probs(rseq, t), spec, epsilon);
}

double expected_duration(const PrizeSpec& spec) {
    const int n = spec.players();
    const auto c = spec.diffs();
    std::vector<double> terms;
    for (int k = 1; k < n; ++k) {
        terms.push_back(static_cast<double>(n - k) / (n - k + 1) * c[static_cast<std::size_t>(k - 1)]);
    }
    double s = 0.0;
    for (double v : terms) s += v;
    return s;
}

TransitionMatrix transition_matrix(const RateSequence& rseq, double t, ProbabilityMethod method) {
    if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
    TransitionMatrix out{t, {}};
    const auto n = rseq.rates.size();
    bool done = false;
    if (t == 0.0) {
        out.entries = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        done = true;
    } else if (method == ProbabilityMethod::closed_form) {
        require_distinct(rseq);
        done = closed_form_matrix(rseq, t, out.entries, true);
    } else if (method == ProbabilityMethod::automatic && uses_closed_form(rseq)) {
        done = closed_form_matrix(rseq, t, out.entries, false);
    }
    if (!done) {
        out.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const double times[] = {t};
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = integrate_forward(rseq, unit_vector(n, i), times).front();
            for (std::size_t j = 0; j < n; ++j) {
                out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
            }
        }
    }
    return out;
}

Eigen::MatrixXd intensity_matrix(const RateSequence& rseq) {
    const auto n = static_cast<Eigen::Index>(rseq.rates.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        q(i, i) = -rseq.rates[static_cast<std::size_t>(i)];
        q(i, i + 1) = rseq.rates[static_cast<std::size_t>(i)];
    }
    return q;
}

}  // namespace attrition
