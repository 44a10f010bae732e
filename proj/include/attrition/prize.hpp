#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrition/monotone_cubic.hpp"

namespace attrition {

/// V(x) = x^alpha.
struct PowerPrize {
    double alpha = 1.0;
};

/// V(x) = sum_i coefficients[i] * x^i. The constant term must vanish.
struct PolynomialPrize {
    std::vector<double> coefficients;
};

/// Monotone cubic interpolation through (x, V(x)) knots spanning [0, 1].
struct TablePrize {
    std::vector<std::pair<double, double>> knots;
};

using PrizeShape = std::variant<PowerPrize, PolynomialPrize, TablePrize>;

enum class PrizeKind { power, polynomial, table };
enum class Convexity { convex, concave, linear, mixed };

[[nodiscard]] const char* to_string(PrizeKind kind) noexcept;
[[nodiscard]] const char* to_string(Convexity c) noexcept;

/// A prize function on [0, 1] together with its N-player samples.
///
/// values()[k-1] = V_k = V(k/N) for k = 1..N, and diffs()[r] = c_r = V_{r+2} - V_{r+1}
/// for r = 0..N-2. Immutable once built; copies are cheap enough to pass by value
/// into curves and reports.
class PrizeSpec {
public:
    PrizeSpec(PrizeShape shape, int players);

    [[nodiscard]] PrizeKind kind() const noexcept;
    [[nodiscard]] const PrizeShape& shape() const noexcept { return shape_; }
    [[nodiscard]] int players() const noexcept { return players_; }
    [[nodiscard]] bool analytic() const noexcept { return kind() != PrizeKind::table; }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<const double> diffs() const noexcept { return diffs_; }
    /// V_k, one-based.
    [[nodiscard]] double prize(int k) const { return values_.at(static_cast<std::size_t>(k - 1)); }

    /// V(x) on [0, 1]; throws DomainError outside.
    [[nodiscard]] double value(double x) const;
    [[nodiscard]] double derivative(double x) const;
    [[nodiscard]] double second_derivative(double x) const;
    /// Inverse of V on [0, V(1)]; throws DomainError outside.
    [[nodiscard]] double inverse(double t) const;
    /// V(1), which is also the limiting game duration when V(0) = 0.
    [[nodiscard]] double top() const noexcept { return top_; }

    /// Same prize function sampled for a different number of players.
    [[nodiscard]] PrizeSpec with_players(int players) const { return {shape_, players}; }

    /// Non-fatal validation notes (table specs with V(0) != 0, C1-only second derivatives).
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    [[nodiscard]] double raw_value(double x) const;

    PrizeShape shape_;
    int players_;
    MonotoneCubic table_;
    double top_ = 0.0;
    std::vector<double> values_;
    std::vector<double> diffs_;
    std::vector<std::string> warnings_;
};

[[nodiscard]] PrizeSpec make_prize(const PrizeShape& shape, int players);
[[nodiscard]] double eval_V(const PrizeSpec& spec, double x);
[[nodiscard]] double eval_V_inverse(const PrizeSpec& spec, double t);
[[nodiscard]] Convexity classify_convexity(const PrizeSpec& spec);

// {"kind": "power", "alpha": 0.5, "N": 100}, {"kind": "polynomial", "coefficients": [...], "N": ..},
// {"kind": "table", "knots": [[0, 0], ...], "N": ..}
void to_json(nlohmann::json& j, const PrizeSpec& spec);
[[nodiscard]] PrizeSpec prize_from_json(const nlohmann::json& j);

}  // namespace attrition
