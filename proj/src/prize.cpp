#include "attrition/prize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "attrition/errors.hpp"

namespace attrition {

namespace {

constexpr double kConvexityTieTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double horner(std::span<const double> a, double x) {
    double acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * x + *it;
    return acc;
}

void check_unit_interval(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream os;
        os << "prize function evaluated at x = " << x << ", outside [0, 1]";
        throw DomainError(os.str());
    }
}

}  // namespace

const char* to_string(PrizeKind kind) noexcept {
    switch (kind) {
        case PrizeKind::power: return "power";
        case PrizeKind::polynomial: return "polynomial";
        case PrizeKind::table: return "table";
    }
    return "?";
}

const char* to_string(Convexity c) noexcept {
    switch (c) {
        case Convexity::convex: return "convex";
        case Convexity::concave: return "concave";
        case Convexity::linear: return "linear";
        case Convexity::mixed: return "mixed";
    }
    return "?";
}

PrizeSpec::PrizeSpec(PrizeShape shape, int players) : shape_(std::move(shape)), players_(players) {
    if (players_ < 2) throw InvalidParameter("number of players must be at least 2");

    std::visit(Overloaded{
                   [](const PowerPrize& p) {
                       if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
                           throw InvalidParameter("power prize needs alpha > 0");
                       }
                   },
                   [](const PolynomialPrize& p) {
                       if (p.coefficients.empty()) throw InvalidParameter("polynomial prize has no coefficients");
                       if (p.coefficients.front() != 0.0) {
                           throw InvalidParameter("polynomial prize must satisfy V(0) = 0");
                       }
                   },
                   [this](const TablePrize& p) {
                       if (p.knots.size() < 2) throw InvalidParameter("table prize needs at least two knots");
                       std::vector<double> xs, ys;
                       for (const auto& [x, y] : p.knots) {
                           xs.push_back(x);
                           ys.push_back(y);
                       }
                       for (std::size_t i = 1; i < xs.size(); ++i) {
                           if (!(xs[i] > xs[i - 1])) throw InvalidParameter("table knots must be strictly increasing in x");
                           if (!(ys[i] > ys[i - 1])) throw NonMonotonePrize("table knot values must be strictly increasing");
                       }
                       if (xs.front() != 0.0 || xs.back() != 1.0) {
                           throw InvalidParameter("table knots must span exactly [0, 1]");
                       }
                       if (ys.front() != 0.0) warnings_.emplace_back("table prize has V(0) != 0");
                       warnings_.emplace_back("table prize: second derivative comes from a C1 interpolant");
                       table_ = MonotoneCubic(std::move(xs), std::move(ys));
                   },
               },
               shape_);

    top_ = raw_value(1.0);
    values_.resize(static_cast<std::size_t>(players_));
    for (int k = 1; k <= players_; ++k) {
        values_[static_cast<std::size_t>(k - 1)] = raw_value(static_cast<double>(k) / players_);
    }
    if (!(values_.front() > 0.0)) {
        throw InvalidParameter("V(1/N) must be positive");
    }
    diffs_.resize(values_.size() - 1);
    for (std::size_t r = 0; r < diffs_.size(); ++r) {
        diffs_[r] = values_[r + 1] - values_[r];
        if (!(diffs_[r] > 0.0)) {
            std::ostringstream os;
            os << "V_" << r + 2 << " <= V_" << r + 1;
            throw NonMonotonePrize(os.str());
        }
    }
}

PrizeKind PrizeSpec::kind() const noexcept { return static_cast<PrizeKind>(shape_.index()); }

double PrizeSpec::raw_value(double x) const {
    return std::visit(Overloaded{
                          [x](const PowerPrize& p) { return std::pow(x, p.alpha); },
                          [x](const PolynomialPrize& p) { return horner(p.coefficients, x); },
                          [this, x](const TablePrize&) { return table_.value(x); },
                      },
                      shape_);
}

double PrizeSpec::value(double x) const {
    check_unit_interval(x);
    return raw_value(x);
}

double PrizeSpec::derivative(double x) const {
    check_unit_interval(x);
    return std::visit(Overloaded{
                          [x](const PowerPrize& p) {
                              return p.alpha == 1.0 ? 1.0 : p.alpha * std::pow(x, p.alpha - 1.0);
                          },
                          [x](const PolynomialPrize& p) {
                              double acc = 0.0;
                              for (std::size_t i = p.coefficients.size(); i-- > 1;) {
                                  acc = acc * x + static_cast<double>(i) * p.coefficients[i];
                              }
                              return acc;
                          },
                          [this, x](const TablePrize&) { return table_.derivative(x); },
                      },
                      shape_);
}

double PrizeSpec::second_derivative(double x) const {
    check_unit_interval(x);
    return std::visit(Overloaded{
                          [x](const PowerPrize& p) {
                              if (p.alpha == 1.0) return 0.0;
                              return p.alpha * (p.alpha - 1.0) * std::pow(x, p.alpha - 2.0);
                          },
                          [x](const PolynomialPrize& p) {
                              double acc = 0.0;
                              for (std::size_t i = p.coefficients.size(); i-- > 2;) {
                                  acc = acc * x + static_cast<double>(i * (i - 1)) * p.coefficients[i];
                              }
                              return acc;
                          },
                          [this, x](const TablePrize&) { return table_.second_derivative(x); },
                      },
                      shape_);
}

double PrizeSpec::inverse(double t) const {
    const double lo_value = raw_value(0.0);
    if (!(t >= std::min(0.0, lo_value) && t <= top_)) {
        std::ostringstream os;
        os << "V^{-1} evaluated at t = " << t << ", outside [0, " << top_ << "]";
        throw DomainError(os.str());
    }
    if (const auto* p = std::get_if<PowerPrize>(&shape_)) {
        return std::pow(t, 1.0 / p->alpha);
    }
    if (t <= lo_value) return 0.0;
    // Bisection until the bracket collapses to adjacent doubles.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (raw_value(mid) < t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::abs(raw_value(lo) - t) <= std::abs(raw_value(hi) - t) ? lo : hi;
}

PrizeSpec make_prize(const PrizeShape& shape, int players) { return {shape, players}; }

double eval_V(const PrizeSpec& spec, double x) { return spec.value(x); }

double eval_V_inverse(const PrizeSpec& spec, double t) { return spec.inverse(t); }

Convexity classify_convexity(const PrizeSpec& spec) {
    const auto c = spec.diffs();
    bool up = false, down = false;
    for (std::size_t r = 0; r + 1 < c.size(); ++r) {
        const double step = c[r + 1] - c[r];
        const double tie = kConvexityTieTolerance * std::max(std::abs(c[r]), std::abs(c[r + 1]));
        if (step > tie) up = true;
        if (step < -tie) down = true;
    }
    if (up && down) return Convexity::mixed;
    if (up) return Convexity::convex;
    if (down) return Convexity::concave;
    return Convexity::linear;
}

void to_json(nlohmann::json& j, const PrizeSpec& spec) {
    j = nlohmann::json::object();
    j["kind"] = to_string(spec.kind());
    std::visit(Overloaded{
                   [&j](const PowerPrize& p) { j["alpha"] = p.alpha; },
                   [&j](const PolynomialPrize& p) { j["coefficients"] = p.coefficients; },
                   [&j](const TablePrize& p) {
                       auto knots = nlohmann::json::array();
                       for (const auto& [x, y] : p.knots) knots.push_back({x, y});
                       j["knots"] = knots;
                   },
               },
               spec.shape());
    j["N"] = spec.players();
}

PrizeSpec prize_from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        const int players = j.at("N").get<int>();
        if (kind == "power") return {PowerPrize{j.at("alpha").get<double>()}, players};
        if (kind == "polynomial") {
            return {PolynomialPrize{j.at("coefficients").get<std::vector<double>>()}, players};
        }
        if (kind == "table") {
            TablePrize t;
            for (const auto& k : j.at("knots")) {
                if (!k.is_array() || k.size() != 2) throw InvalidParameter("table knot must be an [x, V] pair");
                t.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
            }
            return {std::move(t), players};
        }
        throw InvalidParameter("unknown prize kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("malformed prize JSON: ") + e.what());
    }
}

}  // namespace attrition
