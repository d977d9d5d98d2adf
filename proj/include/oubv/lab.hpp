#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oubv/bv.hpp"
#include "oubv/convex.hpp"
#include "oubv/gaussian.hpp"
#include "oubv/ou.hpp"

namespace oubv {

/// Failure inside one step of an experiment, tagged with the step's name.
class LabError : public std::runtime_error {
public:
    LabError(std::string op, const std::string& what)
        : std::runtime_error(op + ": " + what), op_(std::move(op)) {}
    const std::string& op() const { return op_; }

private:
    std::string op_;
};

template <class F>
auto guarded(const char* op, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const LabError&) {
        throw;
    } catch (const std::exception& e) {
        throw LabError(op, e.what());
    }
}

/// Deterministic number formatting used by every output file.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::string experiment = "theorem-check";
    std::optional<int> dim;
    std::string domain = "interval:-1,1";
    std::optional<std::string> u0;
    std::optional<double> half_width;
    std::optional<double> h;
    double tmin = 1e-3;
    double tmax = 1.0;
    int nt = 24;
    double t = 0.5;                  // mehler-oracle evaluation time
    std::string target = "ball:1";
    int faces_min = 4;
    int faces_max = 12;
    std::vector<double> lambdas{1.0};
    double delta_scale = 0.2;        // delta_m = delta_scale / m
    double error_constant = 1.0;
    double tolerance = 1e-3;         // mehler-oracle L^2 tolerance
    std::string out = "out";
    std::uint64_t seed = 0;

    int effective_dim() const {
        if (dim) return *dim;
        return experiment == "domain-convergence" ? 2 : 1;
    }
    double effective_half_width() const {
        if (half_width) return *half_width;
        return effective_dim() == 1 ? 8.0 : 6.0;
    }
    double effective_spacing() const {
        if (h) return *h;
        if (experiment == "domain-convergence") return 1.0 / 64.0;
        switch (effective_dim()) {
            case 1: return 1.0 / 1024.0;
            case 2: return 1.0 / 128.0;
            default: return 1.0 / 16.0;
        }
    }
    std::string effective_u0() const {
        if (u0) return *u0;
        return experiment == "domain-convergence" ? "linear" : "sign";
    }
};

inline const std::vector<std::string>& experiment_tags() {
    static const std::vector<std::string> tags{"theorem-check", "domain-convergence", "mehler-oracle",
                                               "property-suite"};
    return tags;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(v.substr(used)) != "") throw std::invalid_argument(key + ": not a number: '" + v + "'");
    return x;
}

inline long long to_integer(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(v.substr(used)) != "") throw std::invalid_argument(key + ": not an integer: '" + v + "'");
    return x;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(to_double(key, trim(cell)));
    if (out.empty()) throw std::invalid_argument(key + ": empty list");
    return out;
}

}  // namespace detail

/// Applies one `key = value` setting; unknown keys are rejected.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key_in, const std::string& value_in) {
    const std::string key = detail::trim(key_in);
    const std::string v = detail::trim(value_in);
    if (key == "experiment") {
        const auto& tags = experiment_tags();
        if (std::find(tags.begin(), tags.end(), v) == tags.end()) {
            throw std::invalid_argument("unknown experiment '" + v + "'");
        }
        cfg.experiment = v;
    } else if (key == "dim") {
        const auto d = detail::to_integer(key, v);
        check_dim(static_cast<int>(d));
        cfg.dim = static_cast<int>(d);
    } else if (key == "domain") {
        cfg.domain = v;
    } else if (key == "u0") {
        cfg.u0 = v;
    } else if (key == "L") {
        cfg.half_width = detail::to_double(key, v);
    } else if (key == "h") {
        cfg.h = detail::to_double(key, v);
    } else if (key == "tmin") {
        cfg.tmin = detail::to_double(key, v);
    } else if (key == "tmax") {
        cfg.tmax = detail::to_double(key, v);
    } else if (key == "nt") {
        cfg.nt = static_cast<int>(detail::to_integer(key, v));
    } else if (key == "t") {
        cfg.t = detail::to_double(key, v);
    } else if (key == "target") {
        cfg.target = v;
    } else if (key == "faces") {
        const auto colon = v.find(':');
        if (colon == std::string::npos) {
            cfg.faces_min = cfg.faces_max = static_cast<int>(detail::to_integer(key, v));
        } else {
            cfg.faces_min = static_cast<int>(detail::to_integer(key, v.substr(0, colon)));
            cfg.faces_max = static_cast<int>(detail::to_integer(key, v.substr(colon + 1)));
        }
    } else if (key == "lambda") {
        cfg.lambdas = detail::to_list(key, v);
    } else if (key == "delta") {
        cfg.delta_scale = detail::to_double(key, v);
    } else if (key == "C") {
        cfg.error_constant = detail::to_double(key, v);
    } else if (key == "tol") {
        cfg.tolerance = detail::to_double(key, v);
    } else if (key == "out") {
        cfg.out = v;
    } else if (key == "seed") {
        const auto s = detail::to_integer(key, v);
        if (s < 0) throw std::invalid_argument("seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(s);
    } else {
        throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
}

/// Reads a flat `key = value` file; `#` starts a comment.
inline void load_config(ExperimentConfig& cfg, std::istream& is) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    ExperimentConfig cfg;
    load_config(cfg, in);
    return cfg;
}

/// Geometric ladder of nt times from tmin to tmax.
inline std::vector<double> time_ladder(double tmin, double tmax, int nt) {
    if (nt < 1) throw std::invalid_argument("time ladder needs at least one point");
    if (!(tmin > 0.0)) throw std::invalid_argument("tmin must be positive");
    if (nt == 1) return {tmin};
    if (!(tmax > tmin)) throw std::invalid_argument("tmax must exceed tmin");
    std::vector<double> out(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) out[i] = tmin * std::pow(tmax / tmin, static_cast<double>(i) / (nt - 1));
    out.back() = tmax;
    return out;
}

/// Ordered echo of the effective settings.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("experiment", cfg.experiment);
    e.emplace_back("seed", std::to_string(cfg.seed));
    e.emplace_back("dim", std::to_string(cfg.effective_dim()));
    e.emplace_back("L", fmt(cfg.effective_half_width()));
    e.emplace_back("h", fmt(cfg.effective_spacing()));
    if (cfg.experiment == "theorem-check") {
        e.emplace_back("domain", cfg.domain);
        e.emplace_back("u0", cfg.effective_u0());
        e.emplace_back("tmin", fmt(cfg.tmin));
        e.emplace_back("tmax", fmt(cfg.tmax));
        e.emplace_back("nt", std::to_string(cfg.nt));
        e.emplace_back("C", fmt(cfg.error_constant));
    } else if (cfg.experiment == "domain-convergence") {
        e.emplace_back("target", cfg.target);
        e.emplace_back("u0", cfg.effective_u0());
        e.emplace_back("faces", std::to_string(cfg.faces_min) + ":" + std::to_string(cfg.faces_max));
        std::string l;
        for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) l += (i ? "," : "") + fmt(cfg.lambdas[i]);
        e.emplace_back("lambda", l);
        e.emplace_back("delta", fmt(cfg.delta_scale));
    } else if (cfg.experiment == "mehler-oracle") {
        e.emplace_back("u0", cfg.u0 ? *cfg.u0 : "linear,square,sign");
        e.emplace_back("t", fmt(cfg.t));
        e.emplace_back("tol", fmt(cfg.tolerance));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Reports

struct Verdict {
    std::string criterion;
    bool pass = false;
    double margin = 0.0;
    std::string detail;
};

/// margin >= 0 passes (margin > 0 when strict).
inline Verdict make_verdict(std::string criterion, double margin, std::string detail = {}, bool strict = false) {
    const bool ok = std::isfinite(margin) && (strict ? margin > 0.0 : margin >= 0.0);
    return Verdict{std::move(criterion), ok, margin, std::move(detail)};
}

struct Report {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, std::string>> fingerprint;
    std::vector<std::string> warnings;
    std::vector<Verdict> verdicts;
    std::vector<std::string> outputs;

    bool passed() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }

    void write(std::ostream& os) const {
        os << "# seed=" << seed << '\n';
        os << "experiment: " << experiment << '\n';
        os << "config:\n";
        for (const auto& [k, v] : config) os << "  " << k << " = " << v << '\n';
        os << "fingerprint:\n";
        for (const auto& [k, v] : fingerprint) os << "  " << k << " = " << v << '\n';
        if (!warnings.empty()) {
            os << "warnings:\n";
            for (const auto& w : warnings) os << "  " << w << '\n';
        }
        os << "verdicts:\n";
        for (const auto& v : verdicts) {
            os << "  " << (v.pass ? "PASS" : "FAIL") << "  " << v.criterion << "  margin=" << fmt(v.margin);
            if (!v.detail.empty()) os << "  (" << v.detail << ')';
            os << '\n';
        }
        if (!outputs.empty()) {
            os << "outputs:\n";
            for (const auto& o : outputs) os << "  " << o << '\n';
        }
        os << "result: " << (passed() ? "PASS" : "FAIL") << '\n';
    }
};

namespace detail {

inline std::filesystem::path prepare_output(const std::string& out) {
    std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    return os;
}

inline void finish_report(Report& rep, const std::filesystem::path& dir) {
    rep.outputs.push_back("report.txt");
    auto os = open_output(dir / "report.txt");
    rep.write(os);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Initial data

/// `sign | step:a | linear | poly:c0[,c1[,c2]] | file:path.csv`, all acting
/// on x1. Piecewise-constant data carry their interface: a point in 1-d, the
/// line x1 = a (as a long segment) in 2-d.
inline InitialDatum make_initial_datum(const std::string& spec, const GridPtr& grid) {
    const int d = grid->dim();
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const auto interface_at = [&](double a, double height) {
        if (d == 3) throw std::invalid_argument("piecewise-constant data are supported in 1-d and 2-d only");
        JumpSet js;
        js.dim = d;
        if (d == 1) {
            js.points.push_back({a, height});
        } else {
            const double far = 2.0 * grid->half_width();
            js.segments.push_back({Point{a, -far, 0.0}, Point{a, far, 0.0}, height});
        }
        return js;
    };
    if (kind == "sign") {
        auto f = ScalarField::from_function(grid, [](const Point& x) {
            return x[0] > 0.0 ? 1.0 : (x[0] < 0.0 ? -1.0 : 0.0);
        });
        return {std::move(f), interface_at(0.0, 2.0), "sign"};
    }
    if (kind == "step") {
        const double a = detail::to_double("step", args);
        auto f = ScalarField::from_function(grid, [a](const Point& x) { return x[0] > a ? 1.0 : 0.0; });
        return {std::move(f), interface_at(a, 1.0), spec};
    }
    if (kind == "linear") {
        return {ScalarField::from_function(grid, [](const Point& x) { return x[0]; }), std::nullopt, "linear"};
    }
    if (kind == "square") {
        return {ScalarField::from_function(grid, [](const Point& x) { return x[0] * x[0]; }), std::nullopt,
                "square"};
    }
    if (kind == "poly") {
        auto c = detail::to_list("poly", args);
        if (c.size() > 3) throw std::invalid_argument("poly takes at most three coefficients");
        c.resize(3, 0.0);
        auto f = ScalarField::from_function(grid, [c](const Point& x) { return c[0] + x[0] * (c[1] + c[2] * x[0]); });
        return {std::move(f), std::nullopt, spec};
    }
    if (kind == "file") {
        std::ifstream in(args);
        if (!in) throw std::invalid_argument("cannot open initial datum file '" + args + "'");
        return {read_csv(grid, in), std::nullopt, spec};
    }
    throw std::invalid_argument("unknown initial datum '" + spec + "'");
}

/// Distance from x to the boundary of the body along +dir, by bisection.
inline double exit_distance(const ConvexBody& body, const Point& x, const Point& dir, double cap = 1e3) {
    const int d = body.dim();
    const auto at = [&](double s) {
        Point y{};
        for (int k = 0; k < d; ++k) y[k] = x[k] + s * dir[k];
        return body.contains(y);
    };
    if (!at(0.0)) return 0.0;
    double lo = 0.0, hi = 1e-3;
    while (at(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > cap) return std::numeric_limits<double>::infinity();
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) ? lo : hi) = mid;
    }
    return lo;
}

/// Smallest distance from the interface to the boundary, measured across
/// the interface (1-d points; midpoints of clipped 2-d chords).
inline double interface_clearance(const JumpSet& js, const ConvexBody& body) {
    double c = std::numeric_limits<double>::infinity();
    if (js.dim == 1) {
        for (const auto& p : js.points) {
            const Point x{p.location, 0.0, 0.0};
            c = std::min({c, exit_distance(body, x, Point{1, 0, 0}), exit_distance(body, x, Point{-1, 0, 0})});
        }
        return c;
    }
    for (const auto& s : js.segments) {
        const auto span = detail::clip_segment(body, s.a, s.b);
        if (!span) return 0.0;
        const double tm = 0.5 * (span->first + span->second);
        Point mid{}, nrm{};
        for (int k = 0; k < 2; ++k) mid[k] = s.a[k] + tm * (s.b[k] - s.a[k]);
        const double len = std::hypot(s.b[0] - s.a[0], s.b[1] - s.a[1]);
        nrm[0] = -(s.b[1] - s.a[1]) / len;
        nrm[1] = (s.b[0] - s.a[0]) / len;
        Point neg{-nrm[0], -nrm[1], 0.0};
        c = std::min({c, exit_distance(body, mid, nrm), exit_distance(body, mid, neg)});
    }
    return c;
}

// ---------------------------------------------------------------------------
// theorem-check

struct TheoremCheckResult {
    Report report;
    SemigroupTrace trace;
};

inline TheoremCheckResult run_theorem_check(const ExperimentConfig& cfg) {
    if (cfg.experiment != "theorem-check") throw LabError("run_theorem_check", "experiment tag must be theorem-check");
    const int d = cfg.effective_dim();
    const double L = cfg.effective_half_width();
    const double h = cfg.effective_spacing();

    TheoremCheckResult res;
    Report& rep = res.report;
    rep.experiment = cfg.experiment;
    rep.seed = cfg.seed;
    rep.config = config_echo(cfg);

    const auto grid = guarded("build_grid", [&] { return build_grid(d, L, h); });
    const auto body = guarded("parse_domain", [&] { return parse_domain(cfg.domain, d); });
    const auto u0 = guarded("initial datum", [&] { return make_initial_datum(cfg.effective_u0(), grid); });
    const auto times = guarded("time ladder", [&] { return time_ladder(cfg.tmin, cfg.tmax, cfg.nt); });
    if (u0.jumps) {
        const double clearance = guarded("jump_variation", [&] {
            jump_variation(*u0.jumps, body);
            return interface_clearance(*u0.jumps, body);
        });
        if (clearance < 10.0 * grid->spacing()) {
            rep.warnings.push_back("jump within 10h of the domain boundary (clearance " + fmt(clearance) +
                                   " < " + fmt(10.0 * grid->spacing()) +
                                   "); boundary-free variation hypothesis at numerical risk");
        }
    }
    if (times.front() < min_resolvable_time(grid->spacing()) * (1.0 - 1e-12)) {
        throw LabError("variation_trace", "tmin " + fmt(times.front()) + " is below (10h)^2 = " +
                                              fmt(min_resolvable_time(grid->spacing())));
    }
    const OUOperator op = guarded("assemble_dirichlet_form", [&] { return OUOperator(grid, body); });
    res.trace = guarded("variation_trace", [&] { return variation_trace(op, u0, times, cfg.error_constant); });
    const auto& tr = res.trace;

    rep.fingerprint = {{"h", fmt(grid->spacing())},
                       {"L", fmt(grid->half_width())},
                       {"nodes", std::to_string(grid->size())},
                       {"interior_unknowns", std::to_string(op.unknowns())},
                       {"tail_mass", fmt(grid->tail_mass())},
                       {"t_min_resolvable", fmt(min_resolvable_time(grid->spacing()))},
                       {"error_model", "C*(h/sqrt(t)+dt^2/t), C=" + fmt(cfg.error_constant)},
                       {"steps_rule", "max(32, ceil(dt_interval/h)), Crank-Nicolson with 2 implicit start steps"},
                       {"reference_method", u0.jumps ? "jump" : "sobolev"}};

    double mono = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < tr.values.size(); ++k) {
        mono = std::min(mono, tr.values[k] + tr.tolerances[k] - tr.values[k + 1]);
    }
    if (tr.values.size() < 2) mono = 0.0;
    // Absolute floor so that a zero reference tolerates roundoff-level F(t).
    const double floor = 1e-12;
    double upper = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tr.values.size(); ++k) {
        upper = std::min(upper, tr.reference * (1.0 + tr.tolerances[k]) + floor - tr.values[k]);
    }
    const double limit =
        tr.reference * tr.tolerances.front() + floor - std::abs(tr.values.front() - tr.reference);
    const double drift = *std::max_element(tr.mass_drift.begin(), tr.mass_drift.end());
    const double contraction = *std::min_element(tr.contraction_margin.begin(), tr.contraction_margin.end());
    rep.verdicts.push_back(make_verdict("monotone: F(t_k+1) <= F(t_k) + err_estimate(t_k)", mono));
    rep.verdicts.push_back(make_verdict("upper bound: F(t) <= reference*(1+err_estimate(t))", upper));
    rep.verdicts.push_back(make_verdict("short-time limit: |F(t_1)-reference| <= reference*err_estimate(t_1)",
                                        limit, "F(t_1)=" + fmt(tr.values.front()) + " reference=" + fmt(tr.reference)));
    rep.verdicts.push_back(make_verdict("mass conservation: drift <= 1e-10", 1e-10 - drift));
    rep.verdicts.push_back(make_verdict("L2 contraction: |T_t u0| <= |u0| + 1e-12", contraction + 1e-12));

    const auto dir = guarded("output", [&] { return detail::prepare_output(cfg.out); });
    {
        auto os = detail::open_output(dir / "trace.csv");
        os << "# seed=" << cfg.seed << " h=" << fmt(grid->spacing()) << " L=" << fmt(grid->half_width())
           << " C=" << fmt(cfg.error_constant) << '\n';
        os << "t,F_t,reference,err_estimate,mass_drift,contraction_margin\n";
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            os << fmt(tr.times[k]) << ',' << fmt(tr.values[k]) << ',' << fmt(tr.reference) << ','
               << fmt(tr.tolerances[k]) << ',' << fmt(tr.mass_drift[k]) << ',' << fmt(tr.contraction_margin[k])
               << '\n';
        }
        rep.outputs.push_back("trace.csv");
    }
    {
        auto os = detail::open_output(dir / "variation.csv");
        os << "# seed=" << cfg.seed << '\n';
        os << "method,value,h,tail\n";
        const auto ref = reference_variation(u0, body);
        os << to_string(ref.method) << ',' << fmt(ref.value) << ',' << fmt(grid->spacing()) << ','
           << fmt(grid->tail_mass()) << '\n';
        if (!u0.jumps) {
            const double r = regularized_variation(u0.field, 1.0 / grid->spacing(), body);
            os << "regularized," << fmt(r) << ',' << fmt(grid->spacing()) << ',' << fmt(grid->tail_mass()) << '\n';
        }
        rep.outputs.push_back("variation.csv");
    }
    {
        auto os = detail::open_output(dir / "solver.log");
        os << "# seed=" << cfg.seed << '\n';
        os << "assemble: unknowns=" << op.unknowns() << " faces=" << op.faces().size()
           << " nonzeros=" << op.form_matrix().nonZeros() << '\n';
        double prev = 0.0;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            const double span = tr.times[k] - prev;
            const int steps = default_steps(span, grid->spacing());
            os << "evolve: t=" << fmt(tr.times[k]) << " interval=" << fmt(span) << " steps=" << steps
               << " dt=" << fmt(span / steps) << " mass_drift=" << fmt(tr.mass_drift[k]) << '\n';
            prev = tr.times[k];
        }
        rep.outputs.push_back("solver.log");
    }
    {
        auto os = detail::open_output(dir / "plot_trace.py");
        os << "# seed=" << cfg.seed << "\n"
           << "# Renders F(t) from trace.csv against the reference variation.\n"
              "import csv\n"
              "import pathlib\n"
              "\n"
              "import matplotlib\n"
              "\n"
              "matplotlib.use(\"Agg\")\n"
              "import matplotlib.pyplot as plt\n"
              "\n"
              "here = pathlib.Path(__file__).resolve().parent\n"
              "with open(here / \"trace.csv\") as fh:\n"
              "    rows = list(csv.DictReader(line for line in fh if not line.startswith(\"#\")))\n"
              "t = [float(r[\"t\"]) for r in rows]\n"
              "F = [float(r[\"F_t\"]) for r in rows]\n"
              "err = [float(r[\"err_estimate\"]) for r in rows]\n"
              "ref = float(rows[0][\"reference\"])\n"
              "fig, ax = plt.subplots(figsize=(6, 4))\n"
              "ax.errorbar(t, F, yerr=[e * ref for e in err], fmt=\"o-\", ms=3, label=\"F(t)\")\n"
              "ax.axhline(ref, color=\"k\", ls=\"--\", label=\"|D u0|(domain)\")\n"
              "ax.set_xscale(\"log\")\n"
              "ax.set_xlabel(\"t\")\n"
              "ax.set_ylabel(\"F(t)\")\n"
              "ax.legend()\n"
              "fig.tight_layout()\n"
              "fig.savefig(here / \"trace.png\", dpi=150)\n";
        rep.outputs.push_back("plot_trace.py");
    }
    detail::finish_report(rep, dir);
    return res;
}

// ---------------------------------------------------------------------------
// domain-convergence

/// Support value max_{x in body} <a, x>: exact for balls and for half-space
/// bodies with a matching face, boundary-sampled otherwise.
inline double support_value(const ConvexBody& body, const Point& a) {
    const int d = body.dim();
    if (body.kind() == ConvexBody::Kind::Ball) return dot(a, body.center(), d) + body.radius() * norm(a, d);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : sample_boundary(body)) {
        if (!p) throw std::invalid_argument("target body is unbounded");
        best = std::max(best, dot(a, *p, d));
    }
    return best;
}

/// Tangent half-spaces of the target with normals at angles 2 pi j / m.
inline std::vector<Halfspace> circumscribed_faces(const ConvexBody& target, int m) {
    if (target.dim() != 2) throw std::invalid_argument("polygonal approximation needs a 2-d target");
    if (m < 3) throw std::invalid_argument("polygon needs at least three faces");
    std::vector<Halfspace> faces;
    for (int j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * j / m;
        const Point a{std::cos(th), std::sin(th), 0.0};
        faces.push_back({a, support_value(target, a)});
    }
    return faces;
}

struct ConvergenceRow {
    int m = 0;
    double lambda = 0.0;
    double w12_error = 0.0;
    double hausdorff = 0.0;
    double gamma_excess = 0.0;
    double hausdorff_resolution = 0.0;
    long iterations = 0;
};

struct DomainConvergenceResult {
    Report report;
    std::vector<ConvergenceRow> rows;
};

inline DomainConvergenceResult run_domain_convergence(const ExperimentConfig& cfg) {
    if (cfg.experiment != "domain-convergence") {
        throw LabError("run_domain_convergence", "experiment tag must be domain-convergence");
    }
    const int d = cfg.effective_dim();
    if (d != 2) throw LabError("run_domain_convergence", "polygonal approximation is defined for dim 2");
    if (cfg.faces_min < 3 || cfg.faces_max < cfg.faces_min) {
        throw LabError("cylindrical_approximation", "face range must satisfy 3 <= min <= max");
    }
    if (cfg.lambdas.empty()) throw LabError("solve_resolvent", "no lambda given");
    for (double l : cfg.lambdas) {
        if (!(l > 0.0)) throw LabError("solve_resolvent", "lambda must be positive");
    }
    if (!(cfg.delta_scale > 0.0)) throw LabError("smooth_body", "delta must be positive");

    DomainConvergenceResult res;
    Report& rep = res.report;
    rep.experiment = cfg.experiment;
    rep.seed = cfg.seed;
    rep.config = config_echo(cfg);

    const auto grid = guarded("build_grid", [&] { return build_grid(d, cfg.effective_half_width(), cfg.effective_spacing()); });
    const auto target = guarded("parse_domain", [&] { return parse_domain(cfg.target, d); });
    const auto f = guarded("initial datum", [&] { return make_initial_datum(cfg.effective_u0(), grid); }).field;
    const OUOperator target_op = guarded("assemble_dirichlet_form", [&] { return OUOperator(grid, target); });
    const double tol = 1e-10;
    std::ostringstream log;
    log << "# seed=" << cfg.seed << '\n';
    log << "target: unknowns=" << target_op.unknowns() << '\n';

    std::vector<ScalarField> exact;
    for (double l : cfg.lambdas) {
        SolveStats st;
        exact.push_back(guarded("solve_resolvent", [&] { return solve_resolvent(target_op, l, f, &st, tol); }));
        log << "solve target lambda=" << fmt(l) << " iterations=" << st.iterations << " residual=" << fmt(st.residual)
            << '\n';
    }
    const double clip = grid->half_width();
    for (int m = cfg.faces_min; m <= cfg.faces_max; ++m) {
        const double delta = cfg.delta_scale / m;
        const auto body = guarded("cylindrical_approximation", [&] {
            const auto faces = circumscribed_faces(target, m);
            return cylindrical_approximation(2, faces, faces.size(), delta, target.center());
        });
        const auto hd = guarded("hausdorff_boundary_distance", [&] {
            return hausdorff_boundary_distance(body, target, clip);
        });
        const double excess = gaussian_measure_difference(*grid, body, target);
        const OUOperator op = guarded("assemble_dirichlet_form", [&] { return OUOperator(grid, body); });
        log << "body m=" << m << " delta=" << fmt(delta) << " unknowns=" << op.unknowns() << '\n';
        for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
            SolveStats st;
            const auto u = guarded("solve_resolvent", [&] { return solve_resolvent(op, cfg.lambdas[i], f, &st, tol); });
            log << "solve m=" << m << " lambda=" << fmt(cfg.lambdas[i]) << " iterations=" << st.iterations
                << " residual=" << fmt(st.residual) << '\n';
            ConvergenceRow row;
            row.m = m;
            row.lambda = cfg.lambdas[i];
            row.w12_error = w12_restriction_error(target_op, u, exact[i]);
            row.hausdorff = hd.distance;
            row.gamma_excess = excess;
            row.hausdorff_resolution = hd.resolution;
            row.iterations = st.iterations;
            res.rows.push_back(row);
        }
    }

    rep.fingerprint = {{"h", fmt(grid->spacing())},
                       {"L", fmt(grid->half_width())},
                       {"tail_mass", fmt(grid->tail_mass())},
                       {"solver_tol", fmt(tol)},
                       {"hausdorff_rays", std::to_string(default_ray_count(2))},
                       {"hausdorff_clip_radius", fmt(clip)},
                       {"delta_schedule", fmt(cfg.delta_scale) + "/m"},
                       {"mollifier_points", "9^d"}};

    const auto decrease = [&](auto value, double lambda) {
        double margin = std::numeric_limits<double>::infinity();
        const ConvergenceRow* prev = nullptr;
        for (const auto& r : res.rows) {
            if (r.lambda != lambda) continue;
            if (prev) margin = std::min(margin, value(*prev) - value(r));
            prev = &r;
        }
        return margin;
    };
    for (double l : cfg.lambdas) {
        rep.verdicts.push_back(make_verdict("W12 restriction error strictly decreasing in m (lambda=" + fmt(l) + ")",
                                            decrease([](const ConvergenceRow& r) { return r.w12_error; }, l), {},
                                            true));
    }
    const double l0 = cfg.lambdas.front();
    rep.verdicts.push_back(make_verdict("Hausdorff boundary distance strictly decreasing in m",
                                        decrease([](const ConvergenceRow& r) { return r.hausdorff; }, l0), {}, true));
    rep.verdicts.push_back(make_verdict("gamma(Omega_m \\ Omega) strictly decreasing in m",
                                        decrease([](const ConvergenceRow& r) { return r.gamma_excess; }, l0), {},
                                        true));

    const auto dir = guarded("output", [&] { return detail::prepare_output(cfg.out); });
    {
        auto os = detail::open_output(dir / "convergence.csv");
        os << "# seed=" << cfg.seed << '\n';
        os << "m,lambda,w12_error,hausdorff,gamma_excess,h,hausdorff_resolution,solver_tol\n";
        for (const auto& r : res.rows) {
            os << r.m << ',' << fmt(r.lambda) << ',' << fmt(r.w12_error) << ',' << fmt(r.hausdorff) << ','
               << fmt(r.gamma_excess) << ',' << fmt(grid->spacing()) << ',' << fmt(r.hausdorff_resolution) << ','
               << fmt(tol) << '\n';
        }
        rep.outputs.push_back("convergence.csv");
    }
    {
        auto os = detail::open_output(dir / "solver.log");
        os << log.str();
        rep.outputs.push_back("solver.log");
    }
    {
        auto os = detail::open_output(dir / "plot_convergence.py");
        os << "# seed=" << cfg.seed << "\n"
           << "# Renders the convergence table in convergence.csv.\n"
              "import csv\n"
              "import pathlib\n"
              "\n"
              "import matplotlib\n"
              "\n"
              "matplotlib.use(\"Agg\")\n"
              "import matplotlib.pyplot as plt\n"
              "\n"
              "here = pathlib.Path(__file__).resolve().parent\n"
              "with open(here / \"convergence.csv\") as fh:\n"
              "    rows = list(csv.DictReader(line for line in fh if not line.startswith(\"#\")))\n"
              "fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))\n"
              "for lam in sorted({r[\"lambda\"] for r in rows}, key=float):\n"
              "    sel = [r for r in rows if r[\"lambda\"] == lam]\n"
              "    a.semilogy([int(r[\"m\"]) for r in sel], [float(r[\"w12_error\"]) for r in sel], \"o-\",\n"
              "               label=f\"lambda={lam}\")\n"
              "first = [r for r in rows if r[\"lambda\"] == rows[0][\"lambda\"]]\n"
              "b.semilogy([int(r[\"m\"]) for r in first], [float(r[\"hausdorff\"]) for r in first], \"o-\",\n"
              "           label=\"Hausdorff\")\n"
              "b.semilogy([int(r[\"m\"]) for r in first], [float(r[\"gamma_excess\"]) for r in first], \"s-\",\n"
              "           label=\"gamma excess\")\n"
              "a.set_xlabel(\"m\")\n"
              "a.set_ylabel(\"W12 restriction error\")\n"
              "b.set_xlabel(\"m\")\n"
              "a.legend()\n"
              "b.legend()\n"
              "fig.tight_layout()\n"
              "fig.savefig(here / \"convergence.png\", dpi=150)\n";
        rep.outputs.push_back("plot_convergence.py");
    }
    detail::finish_report(rep, dir);
    return res;
}

// ---------------------------------------------------------------------------
// mehler-oracle

struct OracleRow {
    std::string datum;
    double error = 0.0;
};

struct MehlerOracleResult {
    Report report;
    std::vector<OracleRow> rows;
};

/// Compares the Neumann solver on the whole grid box with the Mehler formula.
inline MehlerOracleResult run_mehler_oracle(const ExperimentConfig& cfg) {
    if (cfg.experiment != "mehler-oracle") throw LabError("run_mehler_oracle", "experiment tag must be mehler-oracle");
    if (!(cfg.t > 0.0)) throw LabError("evolve_semigroup", "t must be positive");
    const int d = cfg.effective_dim();
    MehlerOracleResult res;
    Report& rep = res.report;
    rep.experiment = cfg.experiment;
    rep.seed = cfg.seed;
    rep.config = config_echo(cfg);

    const auto grid = guarded("build_grid", [&] { return build_grid(d, cfg.effective_half_width(), cfg.effective_spacing()); });
    const OUOperator op = guarded("assemble_dirichlet_form", [&] { return OUOperator(grid, ConvexBody::whole_space(d)); });
    std::vector<std::string> data{"linear", "square", "sign"};
    if (cfg.u0) data = {*cfg.u0};
    for (const auto& spec : data) {
        const auto u0 = guarded("initial datum", [&] { return make_initial_datum(spec, grid); });
        const auto a = guarded("evolve_semigroup", [&] { return evolve_semigroup(op, u0.field, cfg.t); });
        const auto b = guarded("mehler_apply", [&] { return mehler_apply(u0.field, cfg.t); });
        res.rows.push_back({spec, l2_distance(a, b)});
        rep.verdicts.push_back(make_verdict("|evolve - mehler|_L2 <= " + fmt(cfg.tolerance) + " for u0=" + spec,
                                            cfg.tolerance - res.rows.back().error));
    }
    rep.fingerprint = {{"h", fmt(grid->spacing())},
                       {"L", fmt(grid->half_width())},
                       {"tail_mass", fmt(grid->tail_mass())},
                       {"steps", std::to_string(default_steps(cfg.t, grid->spacing()))}};

    const auto dir = guarded("output", [&] { return detail::prepare_output(cfg.out); });
    {
        auto os = detail::open_output(dir / "oracle.csv");
        os << "# seed=" << cfg.seed << '\n';
        os << "u0,t,l2_error,h,tail,tolerance\n";
        for (const auto& r : res.rows) {
            os << r.datum << ',' << fmt(cfg.t) << ',' << fmt(r.error) << ',' << fmt(grid->spacing()) << ','
               << fmt(grid->tail_mass()) << ',' << fmt(cfg.tolerance) << '\n';
        }
        rep.outputs.push_back("oracle.csv");
    }
    detail::finish_report(rep, dir);
    return res;
}

// ---------------------------------------------------------------------------
// property-suite

/// One checked instance; margin >= 0 means the property held.
struct PropertyRow {
    std::string property;
    std::string instance;
    double value = 0.0;
    double tolerance = 0.0;
    double margin = 0.0;
    double h = 0.0;
};

struct PropertyGroup {
    std::string name;
    std::vector<PropertyRow> rows;
    double min_margin() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) m = std::min(m, r.margin);
        return m;
    }
    double min_margin(const std::string& property) const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            if (r.property == property) m = std::min(m, r.margin);
        }
        return m;
    }
    double max_value(const std::string& property) const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            if (r.property == property) m = std::max(m, r.value);
        }
        return m;
    }
    void add(std::string property, std::string instance, double value, double tolerance, double margin, double h) {
        rows.push_back({std::move(property), std::move(instance), value, tolerance, margin, h});
    }
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    // Explicit mapping keeps the stream identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

struct RandomCase {
    std::string label;
    GridPtr grid;
    ConvexBody body;
};

inline RandomCase random_body_case(std::mt19937_64& rng, const GridPtr& line, const GridPtr& plane) {
    const int kind = uniform_int(rng, 0, 3);
    switch (kind) {
        case 0: {
            const double a = uniform(rng, -2.0, -0.5), b = uniform(rng, 0.5, 2.0);
            return {"interval(" + fmt(a) + "," + fmt(b) + ")", line, ConvexBody::interval(a, b)};
        }
        case 1: {
            const double r = uniform(rng, 0.8, 2.0);
            const Point c{uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), 0.0};
            return {"ball(r=" + fmt(r) + ")", plane, ConvexBody::ball(2, r, c)};
        }
        default: {
            const int m = uniform_int(rng, 3, 7);
            const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            std::vector<Halfspace> faces;
            for (int j = 0; j < m; ++j) {
                const double th = phase + 2.0 * std::numbers::pi * (j + uniform(rng, -0.2, 0.2)) / m;
                faces.push_back({{std::cos(th), std::sin(th), 0.0}, uniform(rng, 0.8, 1.6)});
            }
            auto poly = ConvexBody::halfspaces(2, std::move(faces), Point{});
            if (kind == 2) return {"polygon(m=" + std::to_string(m) + ")", plane, poly};
            const double delta = 0.1 * poly.inradius();
            return {"smoothed polygon(m=" + std::to_string(m) + ")", plane, smooth_body(poly, delta)};
        }
    }
}

inline ScalarField random_datum(std::mt19937_64& rng, const GridPtr& g) {
    const double c0 = uniform(rng, -1, 1), c1 = uniform(rng, -1, 1), c2 = uniform(rng, -1, 1);
    const double c3 = uniform(rng, -0.5, 0.5), jump = uniform(rng, -1, 1);
    const double th = uniform(rng, 0.0, 2.0 * std::numbers::pi), s = uniform(rng, -0.5, 0.5);
    const int d = g->dim();
    return ScalarField::from_function(g, [=](const Point& x) {
        const double y = d > 1 ? x[1] : 0.0;
        const double side = d > 1 ? std::cos(th) * x[0] + std::sin(th) * y : x[0];
        return c0 + c1 * x[0] + c2 * y + c3 * x[0] * x[0] + (side > s ? jump : 0.0);
    });
}

inline double scheme_dt(double t, double h) { return t / default_steps(t, h); }

}  // namespace detail

/// Symmetry, L^2 contraction, mass conservation, semigroup law and the
/// resolvent identity on seeded random (body, u0) pairs.
inline PropertyGroup semigroup_properties(std::uint64_t seed, int pairs = 50) {
    PropertyGroup grp{"semigroup", {}};
    std::mt19937_64 rng(seed);
    const auto line = build_grid(1, 6.0, 1.0 / 128.0);
    const auto plane = build_grid(2, 4.0, 1.0 / 16.0);
    for (int i = 0; i < pairs; ++i) {
        const auto c = detail::random_body_case(rng, line, plane);
        const std::string tag = std::to_string(i) + ":" + c.label;
        const double h = c.grid->spacing();
        const OUOperator op(c.grid, c.body);
        const Eigen::VectorXd u = op.restrict(detail::random_datum(rng, c.grid));
        const Eigen::VectorXd v = op.restrict(detail::random_datum(rng, c.grid));
        const double s = detail::uniform(rng, 0.05, 0.5), t = detail::uniform(rng, 0.05, 0.5);
        const double lam = detail::uniform(rng, 0.5, 3.0), mu = detail::uniform(rng, 0.5, 3.0);
        const double nu = std::sqrt(op.inner(u, u)), nv = std::sqrt(op.inner(v, v));

        const Eigen::VectorXd tu = evolve_vector(op, u, t, default_steps(t, h));
        const Eigen::VectorXd tv = evolve_vector(op, v, t, default_steps(t, h));
        const double asym = std::abs(op.inner(tu, v) - op.inner(u, tv));
        const double sym_tol = 1e-10 * nu * nv;
        grp.add("symmetry", tag, asym, sym_tol, sym_tol - asym, h);

        const double ntu = std::sqrt(op.inner(tu, tu));
        grp.add("contraction", tag, ntu - nu, 1e-12, nu + 1e-12 - ntu, h);

        const double drift = std::abs(op.mass(tu) - op.mass(u));
        grp.add("mass", tag, drift, 1e-10, 1e-10 - drift, h);

        const Eigen::VectorXd tsu = evolve_vector(op, tu, s, default_steps(s, h));
        const Eigen::VectorXd tst = evolve_vector(op, u, s + t, default_steps(s + t, h));
        const Eigen::VectorXd law = tsu - tst;
        const double law_err = std::sqrt(op.inner(law, law));
        const double dts = detail::scheme_dt(s, h), dtt = detail::scheme_dt(t, h), dtst = detail::scheme_dt(s + t, h);
        const double law_tol = (dts * dts + dtt * dtt + dtst * dtst + h * h) * std::max(nu, 1e-300);
        grp.add("semigroup law", tag, law_err, law_tol, law_tol - law_err, h);

        const auto f = op.extend(u);
        const Eigen::VectorXd rl = op.restrict(solve_resolvent(op, lam, f));
        const Eigen::VectorXd rm = op.restrict(solve_resolvent(op, mu, f));
        const Eigen::VectorXd rlrm = op.restrict(solve_resolvent(op, lam, op.extend(rm)));
        const Eigen::VectorXd ident = rl - rm - (mu - lam) * rlrm;
        const double ident_err = std::sqrt(op.inner(ident, ident));
        const double ident_tol = 1e-7 * std::max(nu, 1e-300);
        grp.add("resolvent identity", tag, ident_err, ident_tol, ident_tol - ident_err, h);

        const double nrl = std::sqrt(op.inner(rl, rl));
        grp.add("resolvent bound", tag, lam * nrl - nu, 1e-9 * nu, nu * (1.0 + 1e-9) - lam * nrl, h);
    }
    return grp;
}

/// Variation contraction, L^2 contraction and idempotence of E_1 on seeded
/// 2-d fields, measured on nested slabs |x1| < a.
inline PropertyGroup conditional_expectation_properties(std::uint64_t seed, int fields = 25) {
    PropertyGroup grp{"conditional expectation", {}};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const auto g = build_grid(2, 4.0, 1.0 / 32.0);
    const std::vector<double> slabs{0.5, 1.0, 2.0};
    for (int i = 0; i < fields; ++i) {
        std::array<double, 9> c{};
        for (auto& x : c) x = detail::uniform(rng, -1.0, 1.0);
        const double w = detail::uniform(rng, 0.2, 1.0);
        const auto u = ScalarField::from_function(g, [&](const Point& x) {
            return c[0] * std::sin(2.0 * c[1] * x[0] + 3.0 * c[2] * x[1]) + c[3] * x[0] * x[1] +
                   c[4] * std::tanh((x[0] - c[5]) / w) * (1.0 + c[6] * x[1] * x[1]) + c[7] * x[1] +
                   c[8] * std::cos(x[0] * x[1]);
        });
        const auto e = conditional_expectation(u, 1);
        for (double a : slabs) {
            const auto box = ConvexBody::slab(2, -a, a);
            const double vu = sobolev_variation(u, box).value, ve = sobolev_variation(e, box).value;
            const double tol = 1e-12 * (1.0 + vu);
            grp.add("variation contraction", std::to_string(i) + ":|x1|<" + fmt(a), ve - vu, tol, vu + tol - ve,
                    g->spacing());
        }
        const double nu = l2_norm(u), ne = l2_norm(e);
        grp.add("L2 contraction", std::to_string(i), ne - nu, 1e-12 * nu, nu * (1.0 + 1e-12) - ne, g->spacing());
        const auto ee = conditional_expectation(e, 1);
        double idem = 0.0, scale = 0.0;
        for (std::size_t n = 0; n < g->size(); ++n) {
            idem = std::max(idem, std::abs(ee[n] - e[n]));
            scale = std::max(scale, std::abs(e[n]));
        }
        const double itol = 1e-14 * (1.0 + scale);
        grp.add("projection", std::to_string(i), idem, itol, itol - idem, g->spacing());
    }
    return grp;
}

/// Integration-by-parts residual for smooth u and an interior capped bump
/// on h = 2^-6 .. 2^-10; the fitted log-log slope must reach 0.9.
struct IbpStudy {
    PropertyGroup group;
    double fitted_order = 0.0;
    double constant = 0.0;  // max residual / h
};

inline IbpStudy integration_by_parts_study() {
    IbpStudy st;
    st.group.name = "integration by parts";
    std::vector<double> lx, ly;
    for (int p = 6; p <= 10; ++p) {
        const double h = std::ldexp(1.0, -p);
        const auto g = build_grid(1, 8.0, h);
        const auto u = ScalarField::from_function(g, [](const Point& x) { return std::sin(2.0 * x[0]) + x[0] * x[0]; });
        const auto phi = bump_test_field(g, Point{0.3, 0.0, 0.0}, 1.5, 0, 1.0);
        const double r = integration_by_parts_residual(u, phi);
        lx.push_back(std::log(h));
        ly.push_back(std::log(std::max(r, 1e-300)));
        st.constant = std::max(st.constant, r / h);
        st.group.add("residual", "h=2^-" + std::to_string(p), r, h, h - r, h);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    st.fitted_order = sxy / sxx;
    st.group.add("fitted order", "h=2^-6..2^-10", st.fitted_order, 0.9, st.fitted_order - 0.9, std::ldexp(1.0, -10));
    return st;
}

/// Gauge convexity, homogeneity, Lipschitz bound, level-set identity, Euler
/// relation, smoothing containment, shrinking gamma(C_delta \ C) and the
/// boundary gradient bound.
inline PropertyGroup geometry_properties(std::uint64_t seed, int pairs = 1000) {
    PropertyGroup grp{"geometry", {}};
    std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    const auto square = ConvexBody::cube(2, 1.0);
    const auto disk = ConvexBody::ball(2, 1.0);
    std::vector<std::pair<std::string, ConvexBody>> bodies{
        {"interval", ConvexBody::interval(-1.0, 2.0)},
        {"square", square},
        {"disk", disk},
        {"pentagon", ConvexBody::regular_polygon(5, 1.0)},
        {"cube3", ConvexBody::cube(3, 1.0)},
        {"ball3", ConvexBody::ball(3, 1.5, Point{0.2, -0.1, 0.3})},
        {"smoothed square", smooth_body(square, 0.05)},
        {"smoothed pentagon", smooth_body(ConvexBody::regular_polygon(5, 1.0), 0.1)},
    };
    for (const auto& [name, body] : bodies) {
        const int d = body.dim();
        const double r = body.inradius();
        double conv = std::numeric_limits<double>::infinity(), lip = conv, homog = conv;
        double worst_conv = 0.0, worst_lip = 0.0, worst_homog = 0.0;
        for (int i = 0; i < pairs; ++i) {
            Point x{}, y{};
            for (int k = 0; k < d; ++k) {
                x[k] = detail::uniform(rng, -3.0, 3.0);
                y[k] = detail::uniform(rng, -3.0, 3.0);
            }
            const double lam = detail::uniform(rng, 0.0, 1.0), t = detail::uniform(rng, 0.05, 3.0);
            Point z{}, w{};
            for (int k = 0; k < d; ++k) {
                z[k] = lam * x[k] + (1.0 - lam) * y[k];
                w[k] = body.center()[k] + t * (x[k] - body.center()[k]);
            }
            const double mx = body.gauge(x), my = body.gauge(y), mz = body.gauge(z);
            const double ctol = 1e-12 * (1.0 + mx + my);
            conv = std::min(conv, lam * mx + (1.0 - lam) * my + ctol - mz);
            worst_conv = std::max(worst_conv, mz - lam * mx - (1.0 - lam) * my);
            Point dxy{};
            for (int k = 0; k < d; ++k) dxy[k] = x[k] - y[k];
            const double ltol = 1e-12 * (1.0 + mx + my);
            lip = std::min(lip, norm(dxy, d) / r + ltol - std::abs(mx - my));
            worst_lip = std::max(worst_lip, std::abs(mx - my) / std::max(norm(dxy, d), 1e-300));
            if (!body.smooth() || body.kind() == ConvexBody::Kind::Ball) {
                const double dev = std::abs(body.gauge(w) - t * mx);
                const double htol = 1e-12 * (1.0 + t * mx);
                homog = std::min(homog, htol - dev);
                worst_homog = std::max(worst_homog, dev);
            }
        }
        grp.add("convexity", name, worst_conv, 1e-12, conv, 0.0);
        grp.add("lipschitz 1/r", name, worst_lip, 1.0 / r, lip, 0.0);
        if (std::isfinite(homog)) grp.add("homogeneity", name, worst_homog, 1e-12, homog, 0.0);
    }

    // Level-set identity on grid nodes.
    {
        const auto g = build_grid(2, 2.0, 1.0 / 16.0);
        const auto poly = ConvexBody::regular_polygon(5, 1.0);
        int mismatches = 0;
        for (std::size_t n = 0; n < g->size(); ++n) {
            const Point x = g->node(n);
            bool in = true;
            for (const auto& f : poly.faces()) in = in && dot(f.normal, x, 2) < f.offset;
            if (in != poly.contains(x)) ++mismatches;
        }
        grp.add("level-set identity", "pentagon grid nodes", mismatches, 0.0, static_cast<double>(-mismatches),
                g->spacing());
    }

    // Euler relation at boundary points of a gauge body with smooth boundary.
    {
        const auto ball = ConvexBody::ball(2, 1.3, Point{0.1, 0.2, 0.0});
        double worst = 0.0;
        for (const auto& p : sample_boundary(ball)) {
            const auto gg = gauge_gradient(ball, *p);
            Point rel{};
            for (int k = 0; k < 2; ++k) rel[k] = (*p)[k] - ball.center()[k];
            worst = std::max(worst, std::abs(dot(gg.gradient, rel, 2) - ball.gauge(*p)));
        }
        grp.add("euler relation", "ball", worst, 1e-6, 1e-6 - worst, 1e-6);
    }

    // Smoothing: containment, shrinking excess mass, gradient bound.
    const auto grid = build_grid(2, 2.0, 1.0 / 256.0);
    for (const auto& [name, base] : {std::pair<std::string, ConvexBody>{"square", square}, {"disk", disk}}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double delta : {0.2, 0.1, 0.05, 0.025}) {
            const auto sm = smooth_body(base, delta);
            const std::string tag = name + " delta=" + fmt(delta);
            const double cm = containment_margin(base, sm);
            grp.add("containment", tag, cm, 0.0, cm, 0.0);
            const double excess = gaussian_measure_difference(*grid, sm, base);
            grp.add("excess mass decreasing", tag, excess, 0.0, prev - excess, grid->spacing());
            prev = excess;
            const auto gb = boundary_gradient_bound(sm);
            grp.add("gradient bound", tag, gb.radial, 0.0, std::min(gb.radial, gb.magnitude), 1e-6);
        }
    }
    return grp;
}

/// Smooth approximation in variation of sign on (-1, 1) and the lower
/// semicontinuity spot check.
inline PropertyGroup variation_approximation_properties(double lsc_tol = 1e-3) {
    PropertyGroup grp{"variation approximation", {}};
    const auto g = build_grid(1, 8.0, 1.0 / 1024.0);
    const auto body = ConvexBody::interval(-1.0, 1.0);
    const auto u = make_initial_datum("sign", g);
    const double ref = jump_variation(*u.jumps, body).value;
    for (double eps : {0.1, 0.05, 0.02}) {
        const auto ms = meyers_serrin_approximate(u.field, eps, body);
        const double var = sobolev_variation(ms.field, body).value;
        const std::string tag = "eps=" + fmt(eps);
        grp.add("L2 distance < eps", tag, ms.l2_error, eps, eps - ms.l2_error, g->spacing());
        const double bound = eps * ms.drift_factor(eps);
        grp.add("variation drift < eps*exp(eps R + eps^2/2)", tag, std::abs(var - ref), bound,
                bound - std::abs(var - ref), g->spacing());
    }
    double liminf = std::numeric_limits<double>::infinity();
    for (int n : {10, 20, 50}) {
        const auto ms = meyers_serrin_approximate(u.field, 1.0 / n, body);
        liminf = std::min(liminf, sobolev_variation(ms.field, body).value);
    }
    grp.add("lower semicontinuity", "n=10,20,50", liminf - ref, lsc_tol, liminf - ref + lsc_tol, g->spacing());

    // Duality gap on smooth data.
    const auto v = ScalarField::from_function(g, [](const Point& x) { return std::sin(3.0 * x[0]) + 0.5 * x[0]; });
    const auto fam = stock_dual_family(g, {Point{-0.4, 0, 0}, Point{0.0, 0, 0}, Point{0.4, 0, 0}}, {0.3, 0.5});
    const double dual = dual_variation_lower_bound(v, body, fam).value;
    const double sob = sobolev_variation(v, body).value;
    grp.add("duality gap", "sin(3x)+x/2", sob - dual, 0.0, sob - dual, g->spacing());
    return grp;
}

struct PropertySuiteResult {
    Report report;
    std::vector<PropertyGroup> groups;
    double ibp_order = 0.0;
};

inline PropertySuiteResult run_property_suite(const ExperimentConfig& cfg) {
    if (cfg.experiment != "property-suite") throw LabError("run_property_suite", "experiment tag must be property-suite");
    PropertySuiteResult res;
    Report& rep = res.report;
    rep.experiment = cfg.experiment;
    rep.seed = cfg.seed;
    rep.config = config_echo(cfg);
    res.groups.push_back(guarded("semigroup properties", [&] { return semigroup_properties(cfg.seed); }));
    res.groups.push_back(guarded("conditional_expectation", [&] { return conditional_expectation_properties(cfg.seed); }));
    auto ibp = guarded("integration_by_parts_residual", [&] { return integration_by_parts_study(); });
    res.ibp_order = ibp.fitted_order;
    res.groups.push_back(std::move(ibp.group));
    res.groups.push_back(guarded("geometry properties", [&] { return geometry_properties(cfg.seed); }));
    res.groups.push_back(guarded("meyers_serrin_approximate", [&] { return variation_approximation_properties(); }));

    for (const auto& grp : res.groups) {
        std::vector<std::string> names;
        for (const auto& r : grp.rows) {
            if (std::find(names.begin(), names.end(), r.property) == names.end()) names.push_back(r.property);
        }
        for (const auto& n : names) {
            std::size_t count = 0;
            for (const auto& r : grp.rows) count += r.property == n;
            rep.verdicts.push_back(make_verdict(grp.name + ": " + n, grp.min_margin(n),
                                                std::to_string(count) + " instances"));
        }
    }
    rep.fingerprint = {{"semigroup grids", "d=1 L=6 h=2^-7; d=2 L=4 h=2^-4"},
                       {"conditional expectation grid", "d=2 L=4 h=2^-5"},
                       {"geometry mass grid", "d=2 L=2 h=2^-8"},
                       {"variation grid", "d=1 L=8 h=2^-10"},
                       {"solver_tol", "1e-10"},
                       {"rng", "mt19937_64"}};

    const auto dir = guarded("output", [&] { return detail::prepare_output(cfg.out); });
    {
        auto os = detail::open_output(dir / "properties.csv");
        os << "# seed=" << cfg.seed << '\n';
        os << "group,property,instance,value,tolerance,margin,h\n";
        for (const auto& grp : res.groups) {
            for (const auto& r : grp.rows) {
                os << grp.name << ',' << r.property << ",\"" << r.instance << "\"," << fmt(r.value) << ','
                   << fmt(r.tolerance) << ',' << fmt(r.margin) << ',' << fmt(r.h) << '\n';
            }
        }
        rep.outputs.push_back("properties.csv");
    }
    detail::finish_report(rep, dir);
    return res;
}

/// Dispatches on the experiment tag and returns the report.
inline Report run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "theorem-check") return run_theorem_check(cfg).report;
    if (cfg.experiment == "domain-convergence") return run_domain_convergence(cfg).report;
    if (cfg.experiment == "mehler-oracle") return run_mehler_oracle(cfg).report;
    if (cfg.experiment == "property-suite") return run_property_suite(cfg).report;
    throw LabError("run_experiment", "unknown experiment '" + cfg.experiment + "'");
}

}  // namespace oubv
