#include "attrition/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "attrition/dynamic_model.hpp"
#include "attrition/errors.hpp"
#include "attrition/meanfield.hpp"
#include "attrition/output.hpp"
#include "attrition/parallel.hpp"
#include "attrition/prize.hpp"
#include "attrition/simulate.hpp"
#include "attrition/static_model.hpp"

namespace attrition::cli {

namespace {

struct OptionDef {
    const char* name;
    const char* help;
};

// Every value option is held as text so config files and flags share one parser.
constexpr OptionDef kOptions[] = {
    {"prize", "prize family: power | polynomial | table"},
    {"alpha", "power exponent: value, list a,b,c or range lo:hi:step"},
    {"coeffs", "polynomial coefficients c1,c2,... of x, x^2, ..."},
    {"knots", "table knots x:y,x:y,... spanning [0, 1]"},
    {"n", "players: value, list or range lo:hi[:step]"},
    {"grid", "time grid tmin:tmax:points"},
    {"t", "time for dynamic-matrix"},
    {"step", "ODE step (0 = V(1)/10^4)"},
    {"tail-tol", "stop the ODE once 1 - G < tail-tol"},
    {"seed", "64-bit seed"},
    {"replicates", "Monte Carlo replicates"},
    {"delta", "exceedance threshold"},
    {"q", "fraction of rounds summed"},
    {"epsilon", "split point of E[V(X(t))] at (1 - epsilon) N"},
    {"method", "auto | closed | forward (dynamic); closed | quadrature (invasion)"},
    {"phi", "test cdfs: power:p, shift:a, mix:b (comma separated)"},
    {"stride", "emit every stride-th curve node"},
    {"series", "meanfield output: q | m"},
    {"tau-grid", "tau grid tmin:tmax:points for the m series"},
    {"rate", "exponential rate of the alpha family"},
    {"beta-family", "half_normal | exponential"},
    {"coupling", "independent | common random streams"},
    {"format", "csv | json"},
    {"out", "output path or - for standard output"},
};

struct CommandDef {
    const char* name;
    const char* help;
    std::vector<std::string> options;
};

const std::vector<std::string> kPrizeOptions = {"prize", "alpha", "coeffs", "knots", "n"};

std::vector<std::string> with_prize(std::vector<std::string> extra) {
    auto v = kPrizeOptions;
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
}

const std::vector<CommandDef>& commands() {
    static const std::vector<CommandDef> defs = {
        {"dynamic-moments", "E[X(t)], Var X(t) and split E[V(X(t))] of the dynamic model",
         with_prize({"grid", "method", "epsilon"})},
        {"dynamic-matrix", "transition matrix P(t) of the quitting chain", with_prize({"t", "method"})},
        {"dynamic-duration", "expected duration T_N against V(1)", with_prize({})},
        {"static-solve", "ESS cdf G_N of the static model", with_prize({"step", "tail-tol", "stride"})},
        {"q-functional", "second-variation kernel summary", with_prize({"step", "tail-tol"})},
        {"invasion-sweep", "invasion gap by an immediate quitter", with_prize({"step", "tail-tol", "method"})},
        {"meanfield", "large-N limit q(t) or m(t, tau)", with_prize({"grid", "series", "tau-grid"})},
        {"perturbation", "sign of the limit ESS perturbation integral", with_prize({"phi"})},
        {"simulate-dynamic", "Monte Carlo dynamic game", with_prize({"grid", "seed", "replicates"})},
        {"simulate-static", "Monte Carlo static game", with_prize({"step", "tail-tol", "seed", "replicates"})},
        {"theorem2", "strategy indistinguishability experiment",
         {"n", "q", "delta", "seed", "replicates", "rate", "beta-family", "coupling"}},
        {"rate-fit", "log-log decay of A_N and C_N", with_prize({"step", "tail-tol"})},
    };
    return defs;
}

const std::map<std::string, std::map<std::string, std::string>>& command_defaults() {
    static const std::map<std::string, std::map<std::string, std::string>> d = {
        {"dynamic-moments", {{"n", "200"}}},
        {"dynamic-matrix", {{"n", "6"}, {"t", "0.5"}}},
        {"dynamic-duration", {{"n", "25,50,100,200"}}},
        {"static-solve", {{"n", "25"}}},
        {"q-functional", {{"n", "25"}}},
        {"invasion-sweep", {{"n", "4:35"}, {"alpha", "0.5:1.5:0.1"}, {"method", "closed"}}},
        {"meanfield", {{"n", "2"}}},
        {"perturbation", {{"n", "2"}, {"alpha", "0.5,1,2"}}},
        {"simulate-dynamic", {{"n", "10"}, {"replicates", "100000"}}},
        {"simulate-static", {{"n", "5"}, {"replicates", "100000"}}},
        {"theorem2", {{"n", "50,200,800"}, {"replicates", "1000"}}},
        {"rate-fit", {{"n", "20,40,80,160,320"}, {"alpha", "0.5"}}},
    };
    return d;
}

const std::map<std::string, std::string> kGlobalDefaults = {
    {"prize", "power"}, {"alpha", "1"},      {"step", "0"},      {"tail-tol", "1e-12"},
    {"seed", "1"},      {"replicates", "1000"}, {"delta", "0.1"}, {"q", "0.5"},
    {"epsilon", "0.1"}, {"method", "auto"},  {"phi", "power:2,shift:0.2,mix:0.5"},
    {"stride", "10"},   {"series", "q"},     {"tau-grid", "0:5:51"}, {"rate", "1"},
    {"beta-family", "half_normal"}, {"coupling", "independent"}, {"format", "csv"}, {"out", "-"},
};

// ---- text parsing -------------------------------------------------------------------------

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty()) {
        throw InvalidParameter("--" + key + ": '" + s + "' is not a number");
    }
    return v;
}

long long parse_int(const std::string& key, const std::string& s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw InvalidParameter("--" + key + ": '" + s + "' is not an integer");
    }
    return v;
}

std::uint64_t parse_seed(const std::string& s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw InvalidParameter("--seed: '" + s + "' is not an unsigned 64-bit integer");
    }
    return v;
}

double round_sweep_value(double v) { return std::round(v * 1e12) / 1e12; }

std::vector<double> parse_real_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        const auto parts = split(s, ':');
        if (parts.size() != 3) throw InvalidParameter("--" + key + ": range needs lo:hi:step");
        const double lo = parse_double(key, parts[0]);
        const double hi = parse_double(key, parts[1]);
        const double step = parse_double(key, parts[2]);
        if (!(step > 0.0) || hi < lo) throw InvalidParameter("--" + key + ": range needs lo <= hi and step > 0");
        const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (long long i = 0; i < count; ++i) out.push_back(round_sweep_value(lo + static_cast<double>(i) * step));
        return out;
    }
    for (const auto& p : split(s, ',')) out.push_back(parse_double(key, p));
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
    std::vector<int> out;
    auto narrow = [&](long long v) {
        if (v < 1 || v > 1'000'000) throw InvalidParameter("--" + key + ": value out of range");
        return static_cast<int>(v);
    };
    if (s.find(':') != std::string::npos) {
        const auto parts = split(s, ':');
        if (parts.size() < 2 || parts.size() > 3) throw InvalidParameter("--" + key + ": range needs lo:hi[:step]");
        const long long lo = parse_int(key, parts[0]);
        const long long hi = parse_int(key, parts[1]);
        const long long step = parts.size() == 3 ? parse_int(key, parts[2]) : 1;
        if (step < 1 || hi < lo) throw InvalidParameter("--" + key + ": range needs lo <= hi and step >= 1");
        for (long long v = lo; v <= hi; v += step) out.push_back(narrow(v));
        return out;
    }
    for (const auto& p : split(s, ',')) out.push_back(narrow(parse_int(key, p)));
    return out;
}

struct Grid {
    double lo = 0.0;
    double hi = 0.0;
    int points = 0;

    [[nodiscard]] std::vector<double> closed() const {
        std::vector<double> t(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            t[static_cast<std::size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
        }
        return t;
    }
    /// Cell midpoints, which keep endpoint singularities off the grid.
    [[nodiscard]] std::vector<double> open() const {
        std::vector<double> t(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) t[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 0.5) / points;
        return t;
    }
};

Grid parse_grid(const std::string& key, const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw InvalidParameter("--" + key + ": grid needs tmin:tmax:points");
    Grid g{parse_double(key, parts[0]), parse_double(key, parts[1]), static_cast<int>(parse_int(key, parts[2]))};
    if (!(g.lo >= 0.0) || !(g.hi >= g.lo) || g.points < 1) {
        throw InvalidParameter("--" + key + ": grid needs 0 <= tmin <= tmax and points >= 1");
    }
    return g;
}

std::string json_to_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            if (v[i].is_array()) {
                for (std::size_t k = 0; k < v[i].size(); ++k) out += (k ? ":" : "") + json_to_text(v[i][k]);
            } else {
                out += json_to_text(v[i]);
            }
        }
        return out;
    }
    throw InvalidParameter("config values must be strings, numbers or arrays");
}

// ---- resolved configuration ---------------------------------------------------------------

struct RunConfig {
    std::string command;
    std::map<std::string, std::string> text;  ///< resolved option text, for dry runs and metadata

    std::string prize;
    std::vector<double> alpha;
    std::vector<double> coeffs;
    std::vector<std::pair<double, double>> knots;
    std::vector<int> n;
    std::optional<Grid> grid;
    double t = 0.0;
    SolverOptions solver;
    std::uint64_t seed = 1;
    long long replicates = 1;
    double delta = 0.1;
    double q = 0.5;
    double epsilon = 0.1;
    std::string method;
    std::vector<std::string> phi;
    int stride = 1;
    std::string series;
    Grid tau_grid;
    double rate = 1.0;
    std::string beta_family;
    StreamCoupling coupling = StreamCoupling::independent;
    OutputFormat format = OutputFormat::csv;
    std::string out;

    [[nodiscard]] bool has(const std::string& key) const { return text.count(key) != 0; }
    [[nodiscard]] const std::string& get(const std::string& key) const { return text.at(key); }

    [[nodiscard]] PrizeShape shape(double a) const {
        if (prize == "power") return PowerPrize{a};
        if (prize == "polynomial") {
            std::vector<double> c{0.0};
            c.insert(c.end(), coeffs.begin(), coeffs.end());
            return PolynomialPrize{c};
        }
        return TablePrize{knots};
    }
    /// Alpha values to sweep; a single placeholder for non-power prizes.
    [[nodiscard]] std::vector<double> alphas() const { return prize == "power" ? alpha : std::vector<double>{0.0}; }
};

void require_choice(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (value == a) return;
    }
    std::string msg = "--" + key + " must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw InvalidParameter(msg);
}

RunConfig resolve(const std::string& command, std::map<std::string, std::string> text) {
    RunConfig c;
    c.command = command;
    const auto& def = *std::find_if(commands().begin(), commands().end(),
                                    [&](const CommandDef& d) { return d.name == command; });
    std::vector<std::string> allowed = def.options;
    allowed.insert(allowed.end(), {"format", "out"});
    for (const auto& [k, v] : text) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw InvalidParameter("option '" + k + "' does not apply to " + command);
        }
    }
    for (const auto& key : allowed) {
        if (text.count(key)) continue;
        const auto& cd = command_defaults().at(command);
        if (auto it = cd.find(key); it != cd.end()) {
            text[key] = it->second;
        } else if (auto g = kGlobalDefaults.find(key); g != kGlobalDefaults.end()) {
            text[key] = g->second;
        }
    }
    c.text = text;

    c.format = c.get("format") == "json" ? OutputFormat::json : OutputFormat::csv;
    require_choice("format", c.get("format"), {"csv", "json"});
    c.out = c.get("out");

    if (c.has("prize")) {
        c.prize = c.get("prize");
        require_choice("prize", c.prize, {"power", "polynomial", "table"});
        c.alpha = parse_real_list("alpha", c.get("alpha"));
        for (double a : c.alpha) {
            if (!(a > 0.0)) throw InvalidParameter("--alpha must be positive");
        }
        if (c.prize == "polynomial") {
            if (!c.has("coeffs")) throw InvalidParameter("--prize polynomial needs --coeffs");
            c.coeffs = parse_real_list("coeffs", c.get("coeffs"));
        }
        if (c.prize == "table") {
            if (!c.has("knots")) throw InvalidParameter("--prize table needs --knots");
            for (const auto& pair : split(c.get("knots"), ',')) {
                const auto xy = split(pair, ':');
                if (xy.size() != 2) throw InvalidParameter("--knots entries must be x:y");
                c.knots.emplace_back(parse_double("knots", xy[0]), parse_double("knots", xy[1]));
            }
        }
    }
    if (c.has("n")) {
        c.n = parse_int_list("n", c.get("n"));
        std::sort(c.n.begin(), c.n.end());
        c.n.erase(std::unique(c.n.begin(), c.n.end()), c.n.end());
    }
    if (c.has("grid")) c.grid = parse_grid("grid", c.get("grid"));
    if (c.has("t")) {
        c.t = parse_double("t", c.get("t"));
        if (!(c.t >= 0.0)) throw InvalidParameter("--t must be nonnegative");
    }
    if (c.has("step")) {
        c.solver.step = parse_double("step", c.get("step"));
        if (!(c.solver.step >= 0.0)) throw InvalidParameter("--step must be nonnegative");
    }
    if (c.has("tail-tol")) {
        c.solver.tail_tol = parse_double("tail-tol", c.get("tail-tol"));
        if (!(c.solver.tail_tol > 0.0 && c.solver.tail_tol < 1.0)) throw InvalidParameter("--tail-tol must lie in (0, 1)");
    }
    if (c.has("seed")) c.seed = parse_seed(c.get("seed"));
    if (c.has("replicates")) {
        c.replicates = parse_int("replicates", c.get("replicates"));
        if (c.replicates < 1) throw InvalidParameter("--replicates must be at least 1");
    }
    if (c.has("delta")) {
        c.delta = parse_double("delta", c.get("delta"));
        if (!(c.delta > 0.0)) throw InvalidParameter("--delta must be positive");
    }
    if (c.has("q")) {
        c.q = parse_double("q", c.get("q"));
        if (!(c.q > 0.0 && c.q <= 1.0)) throw InvalidParameter("--q must lie in (0, 1]");
    }
    if (c.has("epsilon")) {
        c.epsilon = parse_double("epsilon", c.get("epsilon"));
        if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw InvalidParameter("--epsilon must lie in (0, 1)");
    }
    if (c.has("method")) {
        c.method = c.get("method");
        if (command == "invasion-sweep") {
            require_choice("method", c.method, {"closed", "quadrature"});
        } else {
            require_choice("method", c.method, {"auto", "closed", "forward"});
        }
    }
    if (c.has("phi")) c.phi = split(c.get("phi"), ',');
    if (c.has("stride")) {
        c.stride = static_cast<int>(parse_int("stride", c.get("stride")));
        if (c.stride < 1) throw InvalidParameter("--stride must be at least 1");
    }
    if (c.has("series")) {
        c.series = c.get("series");
        require_choice("series", c.series, {"q", "m"});
    }
    if (c.has("tau-grid")) c.tau_grid = parse_grid("tau-grid", c.get("tau-grid"));
    if (c.has("rate")) {
        c.rate = parse_double("rate", c.get("rate"));
        if (!(c.rate > 0.0)) throw InvalidParameter("--rate must be positive");
    }
    if (c.has("beta-family")) {
        c.beta_family = c.get("beta-family");
        require_choice("beta-family", c.beta_family, {"half_normal", "exponential"});
    }
    if (c.has("coupling")) {
        require_choice("coupling", c.get("coupling"), {"independent", "common"});
        c.coupling = c.get("coupling") == "common" ? StreamCoupling::common : StreamCoupling::independent;
    }

    // Building every prize up front turns invalid shapes into config errors before any work starts.
    if (c.has("prize")) {
        for (double a : c.alphas()) {
            for (int n : c.n) {
                if (n < 2) throw InvalidParameter("--n must be at least 2");
                (void)make_prize(c.shape(a), n);
            }
        }
    }
    return c;
}

// ---- commands -----------------------------------------------------------------------------

ProbabilityMethod probability_method(const std::string& m) {
    if (m == "closed") return ProbabilityMethod::closed_form;
    if (m == "forward") return ProbabilityMethod::forward_equation;
    return ProbabilityMethod::automatic;
}

void describe_prize(Table& t, const RunConfig& c) {
    t.meta("prize", c.prize);
    if (c.prize == "power") t.meta("alpha", c.get("alpha"));
    if (c.prize == "polynomial") t.meta("coeffs", c.get("coeffs"));
    if (c.prize == "table") t.meta("knots", c.get("knots"));
}

Table dynamic_moments(const RunConfig& c) {
    if (c.alphas().size() != 1 || c.n.size() != 1) throw InvalidParameter("dynamic-moments takes a single alpha and N");
    const int n = c.n.front();
    const auto spec = make_prize(c.shape(c.alphas().front()), n);
    const auto rseq = ess_rates(spec);
    const auto times = (c.grid ? *c.grid : Grid{0.0, spec.top(), 101}).closed();
    const auto method = probability_method(c.method);
    const auto series = state_probs_series(rseq, times, method);
    const bool closed = method == ProbabilityMethod::closed_form ||
                        (method == ProbabilityMethod::automatic && uses_closed_form(rseq));

    Table table;
    table.columns = {"t", "E_X", "Var_X"};
    for (int i = 1; i <= n; ++i) table.columns.push_back("p_" + std::to_string(i));
    table.columns.insert(table.columns.end(), {"E_V_lower", "E_V_upper"});
    describe_prize(table, c);
    table.meta("N", std::to_string(n));
    table.meta("epsilon", format_double(c.epsilon));
    table.meta("method", closed ? "closed_form" : "forward_equation");
    for (const auto& dist : series) {
        const auto m = moments_of_X(dist);
        const auto ev = expectation_V_X(dist, spec, c.epsilon);
        std::vector<Cell> row{dist.t, m.mean, m.variance};
        row.insert(row.end(), dist.probs.begin(), dist.probs.end());
        row.insert(row.end(), {ev.lower, ev.upper});
        table.add_row(std::move(row));
    }
    return table;
}

Table dynamic_matrix(const RunConfig& c) {
    if (c.alphas().size() != 1 || c.n.size() != 1) throw InvalidParameter("dynamic-matrix takes a single alpha and N");
    const int n = c.n.front();
    const auto spec = make_prize(c.shape(c.alphas().front()), n);
    const auto p = transition_matrix(ess_rates(spec), c.t, probability_method(c.method));
    Table table;
    table.columns = {"i"};
    for (int j = 1; j <= n; ++j) table.columns.push_back("P_" + std::to_string(j));
    describe_prize(table, c);
    table.meta("N", std::to_string(n));
    table.meta("t", format_double(c.t));
    for (int i = 0; i < n; ++i) {
        std::vector<Cell> row{static_cast<long long>(i + 1)};
        for (int j = 0; j < n; ++j) row.emplace_back(p.entries(i, j));
        table.add_row(std::move(row));
    }
    return table;
}

Table dynamic_duration(const RunConfig& c) {
    Table table;
    table.columns = {"N", "alpha", "T_N", "V1", "abs_error"};
    describe_prize(table, c);
    for (double a : c.alphas()) {
        for (int n : c.n) {
            const auto spec = make_prize(c.shape(a), n);
            const double tn = expected_duration(spec);
            table.add_row({static_cast<long long>(n), a, tn, spec.top(), std::abs(tn - spec.top())});
        }
    }
    return table;
}

Table static_solve(const RunConfig& c) {
    if (c.alphas().size() != 1 || c.n.size() != 1) throw InvalidParameter("static-solve takes a single alpha and N");
    const auto spec = make_prize(c.shape(c.alphas().front()), c.n.front());
    const auto curve = solve_ess_curve(spec, c.solver);
    const auto q = q_functional(curve);
    Table table;
    table.columns = {"t", "G", "g", "Q"};
    describe_prize(table, c);
    table.meta("N", std::to_string(spec.players()));
    table.meta("step", format_double(curve.step));
    table.meta("t_max", format_double(curve.t_max()));
    table.meta("tail_mass", format_double(curve.tail_mass()));
    table.meta("limit_error", format_double(ess_limit_error(curve)));
    const auto stride = static_cast<std::size_t>(c.stride);
    for (std::size_t m = 0; m < curve.size(); ++m) {
        if (m % stride == 0 || m + 1 == curve.size()) table.add_row({curve.t[m], curve.G[m], curve.g[m], q.values[m]});
    }
    return table;
}

struct Cell2 {
    double alpha;
    int n;
};

std::vector<Cell2> sweep_cells(const RunConfig& c) {
    std::vector<Cell2> cells;
    for (double a : c.alphas()) {
        for (int n : c.n) cells.push_back({a, n});
    }
    return cells;
}

Table q_summary(const RunConfig& c) {
    const auto cells = sweep_cells(c);
    std::vector<std::vector<Cell>> rows(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        const auto spec = make_prize(c.shape(cells[i].alpha), cells[i].n);
        const auto curve = solve_ess_curve(spec, c.solver);
        const auto q = q_functional(curve);
        rows[i] = {static_cast<long long>(cells[i].n), cells[i].alpha, q.values.front(), q.min, q.argmin,
                   q.values.back(), std::string(to_string(classify_convexity(spec)))};
    });
    Table table;
    table.columns = {"N", "alpha", "Q0", "Q_min", "argmin", "Q_tmax", "convexity"};
    describe_prize(table, c);
    for (auto& r : rows) table.add_row(std::move(r));
    return table;
}

Table invasion_sweep(const RunConfig& c) {
    const auto cells = sweep_cells(c);
    std::vector<std::vector<Cell>> rows(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        const auto spec = make_prize(c.shape(cells[i].alpha), cells[i].n);
        if (spec.players() < 3) throw InvalidParameter("invasion-sweep needs N >= 3");
        const auto curve = solve_ess_curve(spec, c.solver);
        const bool closed = c.method == "closed" && spec.players() >= 4;
        const auto rep = closed ? delta_invasion_closed(curve) : delta_invasion_quadrature(curve);
        rows[i] = {static_cast<long long>(rep.N), cells[i].alpha, rep.delta, rep.A_N, rep.C_N,
                   std::string(to_string(rep.method))};
    });
    Table table;
    table.columns = {"N", "alpha", "delta", "A_N", "C_N", "method"};
    describe_prize(table, c);
    for (auto& r : rows) table.add_row(std::move(r));
    return table;
}

Table meanfield(const RunConfig& c) {
    if (c.alphas().size() != 1) throw InvalidParameter("meanfield takes a single alpha");
    const auto spec = make_prize(c.shape(c.alphas().front()), c.n.front());
    const auto times = (c.grid ? *c.grid : Grid{0.0, spec.top(), 100}).open();
    Table table;
    describe_prize(table, c);
    table.meta("T", format_double(total_duration(spec)));
    if (c.series == "q") {
        table.columns = {"t", "q", "qdot"};
        for (double t : times) {
            const auto s = q_of_t(spec, t);
            table.add_row({t, s.q, s.qdot});
        }
    } else {
        table.columns = {"t", "tau", "m"};
        const auto taus = c.tau_grid.closed();
        for (double t : times) {
            for (double tau : taus) table.add_row({t, tau, m_density(spec, t, tau)});
        }
    }
    return table;
}

/// Test cdfs written as monotone maps w of [0, 1], applied to q(t): phi(t) = w(q(t)).
std::function<double(double)> phi_map(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) throw InvalidParameter("--phi entries must be kind:parameter");
    const double p = parse_double("phi", parts[1]);
    if (parts[0] == "power") {
        if (!(p > 0.0)) throw InvalidParameter("--phi power needs a positive exponent");
        return [p](double u) { return std::pow(u, p); };
    }
    if (parts[0] == "shift") {
        if (!(p >= 0.0 && p < 1.0)) throw InvalidParameter("--phi shift needs 0 <= a < 1");
        return [p](double u) { return std::max(0.0, (u - p) / (1.0 - p)); };
    }
    if (parts[0] == "mix") {
        if (!(std::abs(p) <= 1.0)) throw InvalidParameter("--phi mix needs |b| <= 1");
        return [p](double u) { return std::clamp(u + p * std::sin(std::numbers::pi * u) / std::numbers::pi, 0.0, 1.0); };
    }
    throw InvalidParameter("--phi kind must be power, shift or mix");
}

Table perturbation(const RunConfig& c) {
    Table table;
    table.columns = {"alpha", "phi", "value", "sign"};
    describe_prize(table, c);
    for (double a : c.alphas()) {
        const auto spec = make_prize(c.shape(a), c.n.front());
        for (const auto& name : c.phi) {
            const auto w = phi_map(name);
            const double v = ess_perturbation(spec, [&](double t) { return w(spec.inverse(t)); });
            const long long sign = std::abs(v) <= 1e-10 ? 0 : (v > 0 ? 1 : -1);
            table.add_row({a, name, v, sign});
        }
    }
    return table;
}

Table simulate_dynamic(const RunConfig& c) {
    if (c.alphas().size() != 1 || c.n.size() != 1) throw InvalidParameter("simulate-dynamic takes a single alpha and N");
    const auto spec = make_prize(c.shape(c.alphas().front()), c.n.front());
    const auto times = (c.grid ? *c.grid : Grid{0.0, spec.top(), 11}).closed();
    const auto run = simulate_dynamic_game(spec, times, c.seed, c.replicates);
    Table table;
    table.columns = {"t", "emp_E_X", "emp_Var_X", "ci"};
    describe_prize(table, c);
    table.meta("N", std::to_string(run.N));
    table.meta("seed", std::to_string(run.seed));
    table.meta("replicates", std::to_string(run.replicates));
    table.meta("duration_mean", format_double(run.scalar("duration_mean")));
    table.meta("duration_ci", format_double(run.scalar("duration_ci")));
    table.meta("T_N", format_double(expected_duration(spec)));
    for (std::size_t j = 0; j < times.size(); ++j) {
        table.add_row({run.column("t")[j], run.column("emp_E_X")[j], run.column("emp_Var_X")[j], run.column("ci")[j]});
    }
    return table;
}

Table simulate_static(const RunConfig& c) {
    if (c.alphas().size() != 1 || c.n.size() != 1) throw InvalidParameter("simulate-static takes a single alpha and N");
    const auto spec = make_prize(c.shape(c.alphas().front()), c.n.front());
    const auto curve = solve_ess_curve(spec, c.solver);
    const auto run = sample_static_game(curve, c.seed, c.replicates);
    Table table;
    table.columns = {"rank", "payoff"};
    describe_prize(table, c);
    table.meta("N", std::to_string(run.N));
    table.meta("seed", std::to_string(run.seed));
    table.meta("replicates", std::to_string(run.replicates));
    table.meta("mean_payoff", format_double(run.scalar("mean_payoff")));
    table.meta("mean_payoff_ci", format_double(run.scalar("mean_payoff_ci")));
    table.meta("indifference_payoff", format_double(payoff_pure_vs_ess(curve, 0.0)));
    const auto& rank = run.column("rank_payoff");
    for (std::size_t k = 0; k < rank.size(); ++k) table.add_row({static_cast<long long>(k + 1), rank[k]});
    return table;
}

Table theorem2(const RunConfig& c) {
    const auto alpha = StrategyDensity::exponential(c.rate);
    const auto beta = c.beta_family == "exponential" ? StrategyDensity::exponential(c.rate)
                                                     : StrategyDensity::half_normal_matched(c.rate);
    const auto res = theorem2_experiment(alpha, beta, c.q, c.n, c.delta, c.seed, c.replicates, c.coupling);
    Table table;
    table.columns = {"N", "exceedance", "ci_lo", "ci_hi", "sum_var_alpha", "sum_var_beta"};
    table.meta("seed", std::to_string(res.seed));
    table.meta("replicates", std::to_string(res.replicates));
    table.meta("q", format_double(res.q));
    table.meta("delta", format_double(res.delta));
    table.meta("rate", format_double(c.rate));
    table.meta("beta_family", c.beta_family);
    table.meta("coupling", to_string(res.coupling));
    for (const auto& r : res.rows) {
        table.add_row({static_cast<long long>(r.N), r.exceedance, r.ci_lo, r.ci_hi, r.sum_var_alpha, r.sum_var_beta});
    }
    return table;
}

Table rate_fit(const RunConfig& c) {
    if (c.prize != "power" || c.alpha.size() != 1) throw InvalidParameter("rate-fit takes a power prize with one alpha");
    const auto fit = invasion_rate_fit(c.alpha.front(), c.n, c.solver);
    Table table;
    table.columns = {"N", "A_N", "C_N"};
    describe_prize(table, c);
    table.meta("slope_A", format_double(fit.slope_A));
    table.meta("slope_C", format_double(fit.slope_C));
    for (std::size_t i = 0; i < fit.N.size(); ++i) {
        table.add_row({static_cast<long long>(fit.N[i]), fit.A_N[i], fit.C_N[i]});
    }
    return table;
}

Table dispatch(const RunConfig& c) {
    static const std::map<std::string, Table (*)(const RunConfig&)> handlers = {
        {"dynamic-moments", dynamic_moments}, {"dynamic-matrix", dynamic_matrix},
        {"dynamic-duration", dynamic_duration}, {"static-solve", static_solve},
        {"q-functional", q_summary},          {"invasion-sweep", invasion_sweep},
        {"meanfield", meanfield},             {"perturbation", perturbation},
        {"simulate-dynamic", simulate_dynamic}, {"simulate-static", simulate_static},
        {"theorem2", theorem2},               {"rate-fit", rate_fit},
    };
    return handlers.at(c.command)(c);
}

void write_plan(std::ostream& os, const RunConfig& c) {
    nlohmann::ordered_json plan;
    plan["command"] = c.command;
    nlohmann::ordered_json opts = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.text) opts[k] = v;
    plan["options"] = std::move(opts);
    if (c.has("prize")) {
        std::size_t cells = c.alphas().size() * c.n.size();
        plan["cells"] = cells;
    }
    os << plan.dump(2) << '\n';
}

std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw InvalidParameter("config file must hold a JSON object");
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : j.items()) {
        std::string key = k;
        std::replace(key.begin(), key.end(), '_', '-');
        out[key] = json_to_text(v);
    }
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical experiments for the N-player war of attrition", "attrition"};
    app.require_subcommand(1);

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, CLI::Option*>> bound;
    std::map<std::string, std::string> config_path;
    std::map<std::string, bool> dry_run;
    for (const auto& def : commands()) {
        auto* sub = app.add_subcommand(def.name, def.help);
        auto& vals = values[def.name];
        std::vector<std::string> keys = def.options;
        keys.insert(keys.end(), {"format", "out"});
        for (const auto& key : keys) {
            const auto* od = std::find_if(std::begin(kOptions), std::end(kOptions),
                                          [&](const OptionDef& o) { return key == o.name; });
            bound[def.name][key] = sub->add_option("--" + key, vals[key], od->help);
        }
        sub->add_option("--config", config_path[def.name], "JSON config; flags override its entries");
        sub->add_flag("--dry-run", dry_run[def.name], "validate and print the resolved plan");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::ostringstream help;
            app.exit(e, help, help);
            out << help.str();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();
    try {
        std::map<std::string, std::string> text;
        if (!config_path[command].empty()) text = load_config(config_path[command]);
        for (const auto& [key, opt] : bound[command]) {
            if (opt->count() > 0) text[key] = values[command][key];
        }
        const auto config = resolve(command, std::move(text));
        if (dry_run[command]) {
            write_plan(out, config);
            return kExitOk;
        }

        const auto table = dispatch(config);
        std::ostringstream buffer;
        buffer.imbue(std::locale::classic());
        write_table(buffer, table, config.format);
        if (config.out == "-") {
            out << buffer.str();
        } else {
            std::ofstream file(config.out, std::ios::binary);
            if (!file) throw InvalidParameter("cannot open output file '" + config.out + "'");
            file << buffer.str();
            if (!file) throw InvalidParameter("cannot write output file '" + config.out + "'");
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.category() == ErrorCategory::config ? kExitConfig : kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace attrition::cli
