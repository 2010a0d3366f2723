#pragma once

// Experiment registry behind the hyperlab command line. Each subcommand reads a Config,
// computes, and returns artifacts plus a one-line summary. execute() writes the files and
// a manifest and maps errors to exit codes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <new>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperlab/boundary.hpp"
#include "hyperlab/config.hpp"
#include "hyperlab/dimension.hpp"
#include "hyperlab/error.hpp"
#include "hyperlab/formulas.hpp"
#include "hyperlab/group.hpp"
#include "hyperlab/jb.hpp"
#include "hyperlab/lab.hpp"
#include "hyperlab/tree.hpp"

namespace hyperlab::harness {

using json = nlohmann::ordered_json;
using config::Config;
using jb::Rational;

inline constexpr std::size_t max_samples = 1'000'000;
inline constexpr double slope_tolerance = 0.10;
inline constexpr double coset_tolerance = 0.15;
inline constexpr double shadow_band = 400.0;
inline constexpr double whitney_A = 12.0;

struct Artifact {
    std::string name;
    std::string body;
};

struct Outcome {
    int status = 0;  // 0 pass, 3 verification failure
    std::string summary;
    json record = json::object();
    std::vector<Artifact> artifacts;
    std::uint64_t seed = 0;
    json constants = json::object();
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> v{"orbit",     "shadows", "dyadic-check", "whitney-check", "jb-bounds",
                                            "dimension", "zero-one", "spiral",      "intersect",     "formulas"};
    return v;
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> k{
        "group.presentation", "group.file", "group.T", "group.subgroup", "group.annulus",
        "boundary.R", "boundary.delta", "boundary.window", "boundary.band", "boundary.measure_depth",
        "boundary.A", "boundary.U", "boundary.point", "boundary.cell_generation", "boundary.cell_index",
        "tree.rank", "tree.depth", "tree.cylinder",
        "jb.system", "jb.tau", "jb.s", "jb.c",
        "lab.target", "lab.h", "lab.rate", "lab.eps", "lab.window", "lab.samples", "lab.seed", "lab.C",
        "lab.horizon", "lab.mode", "lab.taus", "lab.generation", "lab.tolerance",
        "formulas.theorem", "formulas.n", "formulas.s", "formulas.tau", "formulas.a", "formulas.v_gamma",
        "formulas.v_n", "formulas.v_x", "formulas.taus", "formulas.dims", "formulas.v_ns", "formulas.dims_prime",
        "run.workers", "run.budget"};
    return k;
}

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

inline std::string fmt(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// "3", "1/2", "0.25".
inline Rational parse_rational(const std::string& key, const std::string& text) {
    auto bad = [&]() -> Rational { usage_error("key '" + key + "' expects a rational, got '" + text + "'"); };
    try {
        const auto slash = text.find('/');
        if (slash != std::string::npos) {
            std::size_t u1 = 0, u2 = 0;
            const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
            const long long p = std::stoll(a, &u1), q = std::stoll(b, &u2);
            if (u1 != a.size() || u2 != b.size() || q == 0) return bad();
            return Rational(static_cast<std::int64_t>(p), static_cast<std::int64_t>(q));
        }
        const auto dot = text.find('.');
        std::size_t used = 0;
        if (dot == std::string::npos) {
            const long long p = std::stoll(text, &used);
            if (used != text.size()) return bad();
            return Rational(static_cast<std::int64_t>(p));
        }
        const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        const long long p = std::stoll(digits, &used);
        if (used != digits.size() || text.size() - dot - 1 > 12) return bad();
        return Rational(static_cast<std::int64_t>(p), jb::ipow(10, static_cast<int>(text.size() - dot - 1)));
    } catch (const std::logic_error&) {
        return bad();
    }
}

inline std::string csv(const std::string& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out = header + "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
        out += "\n";
    }
    return out;
}

inline std::pair<double, double> window(const Config& cfg, const std::string& key, double a, double b) {
    const auto w = cfg.list(key, {a, b});
    if (w.size() != 2 || !(w[0] < w[1])) usage_error("key '" + key + "' expects two increasing depths");
    return {w[0], w[1]};
}

// free(k) selects the tree backend; its rank.
inline std::optional<int> tree_rank(const Config& cfg) {
    const std::string p = cfg.str("group.presentation", "genus2");
    int k = 0;
    char tail = 0;
    if (std::sscanf(p.c_str(), "free(%d%c", &k, &tail) == 2 && tail == ')') return k;
    if (cfg.has("tree.rank") && p == "free") return static_cast<int>(cfg.integer("tree.rank", 2));
    return std::nullopt;
}

inline group::Presentation presentation(const Config& cfg) {
    if (tree_rank(cfg)) usage_error("this subcommand needs a disk presentation, not the tree backend");
    if (cfg.has("group.file")) return group::load_presentation(cfg.str("group.file", ""));
    return group::builtin(cfg.str("group.presentation", "genus2"));
}

inline double depth_value(const Config& cfg, const std::string& key, double fallback) {
    const double T = cfg.num(key, fallback);
    if (T > limits::max_displacement) resource_error("key '" + key + "': depth beyond 30 exceeds the float guard");
    if (!(T > 0.0)) usage_error("key '" + key + "' must be positive");
    return T;
}

// Closed surface: v = n - 1 = 1.
inline std::optional<double> predicted_exponent(const group::Presentation& pres) {
    if (pres.prune == group::PruneRule::dirichlet) return 1.0;
    return std::nullopt;
}

inline lab::ExperimentConfig experiment(const Config& cfg) {
    lab::ExperimentConfig e;
    e.presentation = cfg.str("group.presentation", "genus2");
    const std::string target = cfg.str("lab.target", "point");
    if (target == "point") {
        e.target = lab::TargetSpec::point();
    } else if (target == "geodesic") {
        e.target = lab::TargetSpec::closed_geodesic(tree::parse_word(cfg.str("lab.h", "1")));
    } else {
        usage_error("lab.target must be point or geodesic");
    }
    e.rate = jb::parse_rate(cfg.str("lab.rate", "linear 1"));
    e.eps = cfg.num("lab.eps", e.eps);
    std::tie(e.T1, e.T2) = window(cfg, "lab.window", e.T1, e.T2);
    const auto samples = cfg.integer("lab.samples", static_cast<std::int64_t>(e.samples));
    if (samples < 1) usage_error("lab.samples must be positive");
    if (static_cast<std::size_t>(samples) > max_samples) resource_error("lab.samples exceeds the budget of 10^6");
    e.samples = static_cast<std::size_t>(samples);
    const auto seed = cfg.integer("lab.seed", 1);
    if (seed < 0) usage_error("lab.seed must be nonnegative");
    e.seed = static_cast<std::uint64_t>(seed);
    e.C = cfg.num("lab.C", e.C);
    e.horizon = cfg.num("lab.horizon", e.horizon);
    e.validate();
    return e;
}

inline void lab_constants(Outcome& o, const lab::ExperimentConfig& e) {
    o.seed = e.seed;
    o.constants["C"] = e.C;
    o.constants["eps"] = e.eps;
    o.constants["stagger"] = lab::stagger;
    o.constants["ladder_step"] = 0.5;
    o.constants["ladder_trim"] = 2;
    o.constants["rate"] = jb::to_string(e.rate);
}

inline std::string series_csv(const dimension::ScaleSeries& s) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < s.scales.size(); ++j) rows.push_back({fmt(s.scales[j]), std::to_string(s.counts[j])});
    return csv("scale,count", rows);
}

inline json estimate_json(const dimension::DimensionEstimate& e) {
    return {{"slope", e.slope}, {"stderr", e.stderr_slope}, {"r2", e.r2}, {"first", e.first}, {"last", e.last}};
}

inline std::string verdict_word(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace detail

// ---------------------------------------------------------------- subcommands

inline Outcome run_orbit(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const double T = depth_value(cfg, "group.T", 10.0);
    if (auto k = tree_rank(cfg)) {
        const tree::FreeGroup g(*k);
        const auto ball = group::tree_orbit_ball(g, static_cast<int>(T));
        const auto est = group::critical_exponent(ball);
        const double pred = std::log(2.0 * *k - 1.0);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < ball.annuli.size(); ++i) rows.push_back({std::to_string(i), std::to_string(ball.annuli[i])});
        o.artifacts.push_back({"annuli.csv", csv("annulus,count", rows)});
        o.record = {{"words", ball.words.size()}, {"exponent", est.value}, {"stderr", est.stderr_value}, {"predicted", pred}};
        o.summary = "orbit: " + std::to_string(ball.words.size()) + " words of F" + std::to_string(*k) +
                    ", critical exponent " + fmt(est.value) + " vs predicted " + fmt(pred);
        return o;
    }
    const auto pres = presentation(cfg);
    if (cfg.has("group.subgroup")) {
        const tree::Word h = tree::parse_word(cfg.str("group.subgroup", "1"));
        const double width = cfg.num("group.annulus", 2.0);
        if (!(width > 0.0)) usage_error("group.annulus must be positive");
        lab::TargetSpec::closed_geodesic(h).validate(pres);
        const double l = pres.evaluate(h).translation_length();
        const auto ball = group::orbit_ball(pres, T + std::log(std::cosh(0.5 * l)) + 0.01);
        const auto tops = group::coset_tops(pres, ball, group::SubgroupSpec::cyclic_word(h), T);
        group::check_top_separation(tops);
        const auto an = group::top_annuli(tops, width, T);
        const auto complete = static_cast<std::size_t>(std::floor(T / width + 1e-9));
        std::vector<double> x, y;
        std::vector<std::vector<std::string>> rows;
        for (std::size_t k = 0; k < an.size(); ++k) {
            rows.push_back({fmt(width * k), std::to_string(an[k])});
            if (k >= 1 && k < complete && an[k] > 0) {
                x.push_back(width * k);
                y.push_back(std::log(static_cast<double>(an[k])));
            }
        }
        if (x.size() < 3) geometry_error("orbit: too few complete annuli for a coset slope");
        const auto fit = stats::least_squares(x, y);
        o.artifacts.push_back({"cosets.csv", csv("depth,tops", rows)});
        const auto pred = predicted_exponent(pres);
        o.record = {{"tops", tops.size()}, {"slope", fit.slope}, {"stderr", fit.stderr_slope}};
        o.summary = "orbit: " + std::to_string(tops.size()) + " coset tops of <" + tree::to_string(h) + ">, slope " +
                    fmt(fit.slope) + " +- " + fmt(fit.stderr_slope);
        if (pred) {
            const bool ok = std::fabs(fit.slope - *pred) <= coset_tolerance;
            o.record["predicted"] = *pred;
            o.summary += " vs predicted " + fmt(*pred) + " (tolerance 0.15) " + verdict_word(ok);
            o.status = ok ? 0 : 3;
        }
        o.constants["annulus"] = width;
        return o;
    }
    const auto ball = group::orbit_ball(pres, T);
    std::vector<std::vector<std::string>> rows, arows;
    for (const auto& e : ball.elements)
        rows.push_back({e.word.empty() ? "e" : tree::to_string(e.word), fmt(e.rho), fmt(e.g.orbit_direction())});
    for (std::size_t i = 0; i < ball.annuli.size(); ++i) arows.push_back({std::to_string(i), std::to_string(ball.annuli[i])});
    o.artifacts.push_back({"orbit.csv", csv("word,rho,direction", rows)});
    o.artifacts.push_back({"annuli.csv", csv("annulus,count", arows)});
    const auto est = group::critical_exponent(ball);
    o.record = {{"points", ball.elements.size()}, {"exponent", est.value}, {"stderr", est.stderr_value}};
    o.summary = "orbit: " + std::to_string(ball.elements.size()) + " points of " + pres.label + " up to T=" + fmt(T) +
                ", critical exponent " + fmt(est.value) + " +- " + fmt(est.stderr_value);
    if (auto pred = predicted_exponent(pres)) {
        o.record["predicted"] = *pred;
        o.summary += " vs predicted " + fmt(*pred);
    }
    return o;
}

inline Outcome run_shadows(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const auto pres = presentation(cfg);
    const double R = cfg.num("boundary.R", 1.0);
    const auto [T1, T2] = window(cfg, "boundary.window", 6.0, 12.0);
    if (T2 > limits::max_displacement) resource_error("shadows: depth beyond 30 exceeds the float guard");
    const double band = cfg.num("boundary.band", shadow_band);
    const auto ball = group::orbit_ball(pres, T2);
    double v = 1.0;
    std::function<double(const arcs::Arc&)> mass;
    std::optional<boundary::SchottkyMeasure> sm;
    if (pres.prune == group::PruneRule::dirichlet) {
        mass = [](const arcs::Arc& a) { return boundary::LebesgueMeasure{}.of(a); };
    } else {
        v = group::critical_exponent(ball).value;
        sm.emplace(pres, v, static_cast<int>(cfg.integer("boundary.measure_depth", 8)));
        mass = [&](const arcs::Arc& a) { return sm->of(a); };
    }
    std::map<long, std::pair<double, double>> per;
    std::map<long, std::size_t> count;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::size_t n = 0;
    for (const auto& e : ball.elements) {
        if (e.rho < T1 || e.rho > T2) continue;
        const double x = mass(boundary::shadow(e, R).cell) * std::exp(v * e.rho);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        ++n;
        const long k = static_cast<long>(std::floor(e.rho));
        auto [it, fresh] = per.emplace(k, std::make_pair(x, x));
        if (!fresh) it->second = {std::min(it->second.first, x), std::max(it->second.second, x)};
        ++count[k];
    }
    if (n == 0 || !(lo > 0.0)) geometry_error("shadows: no orbit points with positive shadow mass in the window");
    std::vector<std::vector<std::string>> rows;
    for (const auto& [k, mm] : per) rows.push_back({std::to_string(k), std::to_string(count[k]), fmt(mm.first), fmt(mm.second)});
    o.artifacts.push_back({"shadows.csv", csv("annulus,count,min_normalized,max_normalized", rows)});
    const double ratio = hi / lo;
    const bool ok = ratio <= band;
    o.status = ok ? 0 : 3;
    o.record = {{"elements", n}, {"v", v}, {"min", lo}, {"max", hi}, {"ratio", ratio}, {"a_gamma", std::sqrt(ratio)}};
    o.constants["R"] = R;
    o.summary = "shadows: " + std::to_string(n) + " elements, mu(S(g,R)) e^(v rho) in [" + fmt(lo) + ", " + fmt(hi) +
                "], band ratio " + fmt(ratio) + " (bound " + fmt(band) + ") " + verdict_word(ok);
    return o;
}

inline json axioms_json(const boundary::AxiomReport& r) {
    return {{"coverage", r.coverage}, {"centered", r.centered}, {"nesting", r.nesting}, {"overlap", r.overlap},
            {"ratio", r.ratio},       {"A", r.A},               {"B", r.B},             {"C", r.C},
            {"n0", r.n0},             {"failure", r.failure}};
}

inline std::string axioms_line(const boundary::AxiomReport& r) {
    auto w = [](bool b) { return b ? "ok" : "FAIL"; };
    std::ostringstream os;
    os << "coverage " << w(r.coverage) << ", centered " << w(r.centered) << ", nesting " << w(r.nesting) << ", overlap "
       << w(r.overlap) << ", ratio " << w(r.ratio) << " (A=" << detail::fmt(r.A) << " B=" << detail::fmt(r.B)
       << " C=" << detail::fmt(r.C) << ")";
    if (!r.failure.empty()) os << ": " << r.failure;
    return os.str();
}

inline Outcome run_dyadic_check(const Config& cfg) {
    using namespace detail;
    Outcome o;
    std::ostringstream dump;
    std::vector<std::vector<std::string>> rows;
    boundary::AxiomReport rep;
    if (auto k = tree_rank(cfg)) {
        const auto depth = cfg.integer("tree.depth", 10);
        if (depth < 1 || depth > 14) resource_error("tree.depth must be in [1, 14]");
        const auto dy = boundary::build_dyadic(tree::FreeGroup(*k), static_cast<int>(depth));
        boundary::export_dyadic(dump, dy);
        for (std::size_t n = 0; n < dy.generations.size(); ++n)
            rows.push_back({std::to_string(n), std::to_string(dy.generations[n].size()), fmt(std::exp(-double(n)))});
        rep = dy.report;
        o.summary = "dyadic-check: F" + std::to_string(*k) + " depth " + std::to_string(depth) + ": ";
    } else {
        const auto pres = presentation(cfg);
        const double T = depth_value(cfg, "group.T", 10.0);
        const double R = cfg.num("boundary.R", 1.0), delta = cfg.num("boundary.delta", 1.0);
        const auto ball = group::orbit_ball(pres, T);
        const auto dy = boundary::build_dyadic(ball, R, delta);
        boundary::export_dyadic(dump, dy);
        for (std::size_t n = 0; n < dy.generations.size(); ++n)
            rows.push_back({std::to_string(n), std::to_string(dy.generations[n].size()), fmt(dy.report.max_diam[n])});
        rep = dy.report;
        o.constants["R"] = R;
        o.constants["delta"] = delta;
        o.summary = "dyadic-check: " + pres.label + " T=" + fmt(T) + ": ";
    }
    o.artifacts.push_back({"dyadic.txt", dump.str()});
    o.artifacts.push_back({"dyadic.csv", csv("generation,cells,max_diam", rows)});
    o.record = axioms_json(rep);
    o.status = rep.all() ? 0 : 3;
    o.summary += axioms_line(rep) + " " + verdict_word(rep.all());
    return o;
}

inline Outcome run_whitney_check(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const double A = cfg.num("boundary.A", whitney_A);
    o.constants["A"] = A;
    std::vector<std::vector<std::string>> rows;
    if (auto k = tree_rank(cfg)) {
        const tree::FreeGroup g(*k);
        const auto w = tree::parse_word(cfg.str("tree.cylinder", "0.1"));
        const auto rep = boundary::whitney(g, w, A);
        for (const auto& c : rep.cells) rows.push_back({tree::to_string(c.cylinder), fmt(c.diam), fmt(c.dist)});
        const bool ok = rep.inequality && rep.unique_points && rep.tiles && std::isfinite(rep.B);
        o.artifacts.push_back({"whitney.csv", csv("cylinder,diam,dist", rows)});
        o.record = {{"cells", rep.cells.size()}, {"A", A}, {"B", rep.B}, {"inequality", rep.inequality},
                    {"tiles", rep.tiles}};
        o.status = ok ? 0 : 3;
        o.summary = "whitney-check: U = C(" + tree::to_string(w) + "), " + std::to_string(rep.cells.size()) +
                    " cells, A=" + fmt(A) + " B=" + fmt(rep.B) + " " + verdict_word(ok);
        return o;
    }
    const auto pres = presentation(cfg);
    const double T = depth_value(cfg, "group.T", 10.0);
    const auto ball = group::orbit_ball(pres, T);
    const auto dy = boundary::build_dyadic(ball, cfg.num("boundary.R", 1.0), cfg.num("boundary.delta", 1.0));
    const std::string which = cfg.str("boundary.U", "both");
    if (which != "both" && which != "point" && which != "cell") usage_error("boundary.U must be point, cell or both");
    std::vector<std::pair<std::string, boundary::OpenSet>> sets;
    if (which != "cell") sets.push_back({"point", boundary::OpenSet::circle_minus_point(cfg.num("boundary.point", 1.0))});
    if (which != "point") {
        const auto gi = cfg.integer("boundary.cell_generation", 3), ci = cfg.integer("boundary.cell_index", 5);
        if (gi < 0 || static_cast<std::size_t>(gi) >= dy.generations.size() || ci < 0 ||
            static_cast<std::size_t>(ci) >= dy.generations[gi].size())
            usage_error("boundary.cell_generation / cell_index outside the decomposition");
        sets.push_back({"cell", boundary::OpenSet{{dy.generations[gi][ci].arc}}});
    }
    bool all_ok = true;
    o.summary = "whitney-check:";
    json recs = json::array();
    for (const auto& [name, U] : sets) {
        const auto rep = boundary::whitney(U, dy, A);
        const bool ok = rep.inequality && rep.unique_points && std::isfinite(rep.B) && !rep.cells.empty();
        all_ok = all_ok && ok;
        for (const auto& c : rep.cells)
            rows.push_back({name, std::to_string(c.generation), fmt(c.cell.arc.start), fmt(c.cell.arc.length), fmt(c.diam),
                            fmt(c.dist)});
        recs.push_back({{"U", name}, {"cells", rep.cells.size()}, {"B", rep.B}, {"min_ratio", rep.min_ratio},
                        {"covered", rep.covered}, {"inequality", rep.inequality}, {"unique_points", rep.unique_points}});
        o.summary += " U=" + name + ": " + std::to_string(rep.cells.size()) + " cells, B=" + fmt(rep.B) + " " +
                     verdict_word(ok) + ";";
    }
    o.summary.pop_back();
    o.summary += " (A=" + fmt(A) + ")";
    o.artifacts.push_back({"whitney.csv", csv("U,generation,start,length,diam,dist", rows)});
    o.record = {{"sets", recs}};
    o.status = all_ok ? 0 : 3;
    return o;
}

// ---------------------------------------------------------------- jb-bounds

struct CanonicalSystem {
    std::string name;
    jb::TreeAlphaBeta exponents;
    int omega = 1;
    jb::Bounds<Rational> bounds;
    Rational formula_lower, formula_upper;
    bool ok = false;
};

inline const std::vector<double>& omega_ladder() {
    static const std::vector<double> ks{3.0 * std::exp(9.0), 3.0 * std::exp(17.0)};
    return ks;
}

// Point target, geodesic colony and the 2^j-thinned point system on the F_k tree, in units of D.
inline std::vector<CanonicalSystem> canonical_systems(int rank, Rational tau, Rational s, Rational c,
                                                      const std::string& which) {
    if (!(tau > Rational(0))) usage_error("jb.tau must be positive");
    if (s < Rational(0) || s > Rational(1)) usage_error("jb.s must lie in [0, 1]");
    const tree::FreeGroup g(rank);
    // Dir depth n with tau n and s tau n integral.
    const std::int64_t n = std::lcm(tau.denominator(), (s * tau).denominator());
    const int tn = static_cast<int>(boost::rational_cast<std::int64_t>(tau * Rational(n)));
    const int stn = static_cast<int>(boost::rational_cast<std::int64_t>(s * tau * Rational(n)));
    if (n + tn > 40) resource_error("jb-bounds: tau and s need a cylinder depth beyond 40");
    if (stn > 12) resource_error("jb-bounds: colony of more than (2k-1)^12 cylinders");
    const tree::Word x(static_cast<std::size_t>(n), 0);
    std::vector<int> all, thinned;
    for (int d = 1; d <= 40; ++d) all.push_back(d);
    for (int d = 1; d <= 32; d *= 2) thinned.push_back(d);
    const std::vector<tree::Word> probes{tree::Word{0}};
    auto make = [&](const std::string& name, const std::vector<tree::Word>& F, const std::vector<int>& depths,
                    Rational s_formula) {
        CanonicalSystem cs;
        cs.name = name;
        cs.exponents = jb::alpha_beta_tree(g, x, F);
        if (!cs.exponents.beta_over_D) geometry_error("jb-bounds: beta is not rational for system " + name);
        cs.omega = jb::omega_tree(g, depths, boost::rational_cast<double>(c), probes, omega_ladder()).omega_bar;
        const jb::Aggregates<Rational> agg{cs.exponents.alpha, cs.exponents.alpha, *cs.exponents.beta_over_D,
                                           *cs.exponents.beta_over_D};
        cs.bounds = jb::dimension_bounds(agg, Rational(1), cs.omega);
        const Rational f = formulas::shrinking_constant(Rational(2), s_formula, tau);
        cs.formula_upper = f;
        cs.formula_lower = cs.omega == jb::omega_infinite ? Rational(0) : f / Rational(cs.omega);
        cs.ok = cs.bounds.lower == cs.formula_lower && cs.bounds.upper == cs.formula_upper;
        return cs;
    };
    auto point_F = [&] {
        tree::Word w = x;
        w.insert(w.end(), static_cast<std::size_t>(tn), 0);
        return std::vector<tree::Word>{w};
    };
    std::vector<CanonicalSystem> out;
    if (which == "all" || which == "point") out.push_back(make("point", point_F(), all, Rational(0)));
    if (which == "all" || which == "colony") {
        // (2k-1)^{s tau n} branches below x, each continued straight down to depth (1 + tau) n.
        std::vector<tree::Word> layer{x};
        for (int i = 0; i < stn; ++i) {
            std::vector<tree::Word> next;
            for (const auto& v : layer)
                for (auto& ch : g.children(v)) next.push_back(std::move(ch));
            layer = std::move(next);
        }
        for (auto& v : layer) v.insert(v.end(), static_cast<std::size_t>(tn - stn), v.back());
        out.push_back(make("colony", layer, all, s));
    }
    if (which == "all" || which == "thinned") out.push_back(make("thinned", point_F(), thinned, Rational(0)));
    if (out.empty()) usage_error("jb.system must be all, point, colony, thinned or oracle");
    return out;
}

struct OracleCase {
    std::string x;
    std::vector<std::string> F;
    Rational alpha;
    std::optional<Rational> beta_over_D;
};

// Hand-computed exponents on F_2: alpha = d / |x|, beta / D = log_3(#depth-d cylinders) / |x|.
inline const std::vector<OracleCase>& oracle_cases() {
    static const std::vector<OracleCase> v{
        {"0", {"0"}, Rational(1), Rational(0)},
        {"0", {"0.1.1"}, Rational(3), Rational(0)},
        {"0", {"0.1", "0.3"}, Rational(2), std::nullopt},
        {"0", {"0.0", "0.1", "0.3"}, Rational(1), Rational(0)},
        {"0.1", {"0.1.0.0", "0.1.0.1", "0.1.0.3"}, Rational(3, 2), Rational(0)},
        {"0", {"0.1.0", "0.1.1", "0.1.2"}, Rational(2), Rational(0)},
        {"0", {"0.1.0", "0.1.1", "0.0.0"}, Rational(3), Rational(1)},
        {"0.1", {"0.1.0.0", "0.1.1.1", "0.1.2.2"}, Rational(2), Rational(1, 2)},
        {"0.1", {"0.1.0.0.0", "0.1.0.0.1", "0.1.0.0.3", "0.1.1"}, Rational(2), std::nullopt},
        {"0.0.0", {"0.0.0.1.1.1"}, Rational(2), Rational(0)},
    };
    return v;
}

struct OracleReport {
    std::size_t alpha_cases = 0, alpha_ok = 0;
    std::size_t content_sets = 0, content_ok = 0, skipped = 0;
    std::uint64_t max_covers = 0;
    double worst = 0.0;
};

// Depth <= 4 cylinder sets inside C(0): all singletons and pairs plus seeded random unions.
inline std::vector<std::vector<tree::Word>> oracle_sets(const tree::FreeGroup& g, std::uint64_t seed) {
    std::vector<tree::Word> pool;
    for (int d = 1; d <= 4; ++d)
        for (auto& w : g.sphere(d))
            if (w.front() == 0) pool.push_back(std::move(w));
    std::vector<std::vector<tree::Word>> sets;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        sets.push_back({pool[i]});
        for (std::size_t j = i + 1; j < pool.size(); ++j) sets.push_back({pool[i], pool[j]});
    }
    std::mt19937_64 rng(seed);
    for (int r = 0; r < 400; ++r) {
        std::vector<tree::Word> s;
        const int m = 3 + static_cast<int>(rng() % 6);
        for (int i = 0; i < m; ++i) s.push_back(pool[rng() % pool.size()]);
        sets.push_back(std::move(s));
    }
    return sets;
}

inline OracleReport tree_oracle(std::uint64_t seed) {
    OracleReport rep;
    const tree::FreeGroup g(2);
    for (const auto& c : oracle_cases()) {
        std::vector<tree::Word> F;
        for (const auto& f : c.F) F.push_back(tree::parse_word(f));
        const auto ab = jb::alpha_beta_tree(g, tree::parse_word(c.x), F);
        ++rep.alpha_cases;
        rep.alpha_ok += ab.alpha == c.alpha && ab.beta_over_D == c.beta_over_D;
    }
    for (const auto& s : oracle_sets(g, seed)) {
        for (double t : {0.5, 1.0, std::log(3.0), 1.5}) {
            dimension::CoverSearch ex;
            try {
                ex = dimension::content_tree_exhaustive(g, s, t, 4);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::resource) throw;
                ++rep.skipped;
                continue;
            }
            const double dp = dimension::content_tree(g, s, t, 4).value;
            ++rep.content_sets;
            rep.max_covers = std::max(rep.max_covers, ex.covers);
            const double err = std::fabs(dp - ex.value);
            rep.worst = std::max(rep.worst, err);
            rep.content_ok += err <= 1e-12 * std::max(1.0, ex.value);
        }
    }
    return rep;
}

inline Outcome run_jb_bounds(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const std::string which = cfg.str("jb.system", "all");
    if (which == "oracle") {
        const auto seed = static_cast<std::uint64_t>(cfg.integer("lab.seed", 1));
        const auto rep = tree_oracle(seed);
        const bool ok = rep.alpha_ok == rep.alpha_cases && rep.content_ok == rep.content_sets && rep.content_sets > 0;
        o.seed = seed;
        o.status = ok ? 0 : 3;
        o.record = {{"alpha_cases", rep.alpha_cases}, {"alpha_exact", rep.alpha_ok}, {"content_sets", rep.content_sets},
                    {"content_equal", rep.content_ok}, {"skipped_over_budget", rep.skipped},
                    {"max_covers", rep.max_covers}, {"worst_difference", rep.worst}};
        o.summary = "jb-bounds oracle: " + std::to_string(rep.alpha_ok) + "/" + std::to_string(rep.alpha_cases) +
                    " exact exponent cases, content equal to exhaustive search on " + std::to_string(rep.content_ok) + "/" +
                    std::to_string(rep.content_sets) + " sets (max " + std::to_string(rep.max_covers) + " covers) " +
                    verdict_word(ok);
        return o;
    }
    const int rank = static_cast<int>(cfg.integer("tree.rank", 2));
    const Rational tau = parse_rational("jb.tau", cfg.str("jb.tau", "1"));
    const Rational s = parse_rational("jb.s", cfg.str("jb.s", "1/2"));
    const Rational c = parse_rational("jb.c", cfg.str("jb.c", "1/3"));
    const auto systems = canonical_systems(rank, tau, s, c, which);
    std::vector<std::vector<std::string>> rows;
    json recs = json::array();
    bool all_ok = true;
    o.summary = "jb-bounds (tau=" + fmt(tau) + ", s=" + fmt(s) + "):";
    for (const auto& cs : systems) {
        all_ok = all_ok && cs.ok;
        const std::string om = cs.omega == jb::omega_infinite ? "inf" : std::to_string(cs.omega);
        rows.push_back({cs.name, fmt(cs.exponents.alpha), fmt(*cs.exponents.beta_over_D), om, fmt(cs.bounds.lower),
                        fmt(cs.bounds.upper), fmt(cs.formula_lower), fmt(cs.formula_upper)});
        recs.push_back({{"system", cs.name}, {"alpha", fmt(cs.exponents.alpha)},
                        {"beta_over_D", fmt(*cs.exponents.beta_over_D)}, {"omega", om},
                        {"lower", fmt(cs.bounds.lower)}, {"upper", fmt(cs.bounds.upper)},
                        {"formula_lower", fmt(cs.formula_lower)}, {"formula_upper", fmt(cs.formula_upper)},
                        {"match", cs.ok}});
        o.summary += " " + cs.name + " [" + fmt(cs.bounds.lower) + ", " + fmt(cs.bounds.upper) + "] vs formula [" +
                     fmt(cs.formula_lower) + ", " + fmt(cs.formula_upper) + "] " + verdict_word(cs.ok) + ";";
    }
    o.summary.pop_back();
    o.artifacts.push_back({"jb_bounds.csv", csv("system,alpha,beta_over_D,omega,lower,upper,formula_lower,formula_upper", rows)});
    o.record = {{"systems", recs}};
    o.constants["omega_c"] = fmt(c);
    o.constants["omega_ks"] = omega_ladder();
    o.constants["alpha_step"] = jb::alpha_step;
    o.constants["capture_fraction"] = "10^-D";
    o.status = all_ok ? 0 : 3;
    return o;
}

// ---------------------------------------------------------------- stages

inline std::optional<double> linear_tau(const jb::RateFunction& f) {
    if (f.family == jb::Family::linear) return f.a;
    return std::nullopt;
}

inline Outcome run_dimension(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const auto e = experiment(cfg);
    lab_constants(o, e);
    const auto pres = presentation(cfg);
    const auto ws = lab::make_workspace(pres, e.target, e.T2);
    const auto stage = lab::shrinking_target_stage(ws, e);
    const auto series = dimension::box_count_matched(stage.scaled(), lab::default_ladder(e));
    const auto est = dimension::slope_fit_trimmed(series);
    const double tol = cfg.num("lab.tolerance", slope_tolerance);
    o.artifacts.push_back({"dimension.csv", series_csv(series)});
    o.record = {{"arcs", stage.arcs.size()}, {"estimate", estimate_json(est)}};
    o.summary = "dimension: " + std::to_string(stage.arcs.size()) + " arcs, box-count slope " + fmt(est.slope) + " +- " +
                fmt(est.stderr_slope);
    if (auto tau = linear_tau(e.rate)) {
        const double pred = formulas::shrinking_constant(2.0, static_cast<double>(e.target.s), *tau);
        const bool ok = std::fabs(est.slope - pred) <= tol;
        o.record["formula_eval"] = {{"theorem", "thm1.1"}, {"value", pred}, {"tolerance", tol}};
        o.summary += " vs formula " + fmt(pred) + " (tolerance " + fmt(tol) + ") " + verdict_word(ok);
        o.status = ok ? 0 : 3;
    } else {
        o.summary += ", no closed-form prediction for rate " + jb::to_string(e.rate);
    }
    return o;
}

// Flow check on 100 arcs: over [rho + c8, rho + f(rho)] the ray stays within eps of the axis.
inline double spiral_certificate(const lab::Workspace& ws, const lab::Stage& st, const lab::ExperimentConfig& e) {
    const double c8 = lab::spiral_entry_delay(e.eps);
    double worst = 0.0;
    if (st.arcs.empty()) return worst;
    const std::size_t step = std::max<std::size_t>(1, st.arcs.size() / 100);
    for (std::size_t i = 0; i < st.arcs.size(); i += step) {
        const auto& a = st.arcs[i];
        const auto& top = ws.tops[a.source];
        const double t1 = a.depth + e.f(a.depth);
        if (t1 <= a.depth + c8) continue;
        for (double th : {a.arc.center(), a.arc.start, a.arc.start + a.arc.length * (1.0 - 1e-9)})
            worst = std::max(worst, lab::max_distance_on_ray(th, top.axis, a.depth + c8, t1));
    }
    return worst;
}

inline Outcome run_spiral(const Config& cfg) {
    using namespace detail;
    Outcome o;
    Config c2 = cfg;
    if (!c2.has("lab.target")) c2.set("lab.target", "geodesic");
    const auto e = experiment(c2);
    lab_constants(o, e);
    o.constants["c_radius"] = lab::spiral_radius_factor(e.eps);
    o.constants["c8"] = lab::spiral_entry_delay(e.eps);
    const auto pres = presentation(cfg);
    const auto ws = lab::make_workspace(pres, e.target, e.T2);
    const auto stage = lab::spiral_trap_stage(ws, e);
    const auto series = dimension::box_count_matched(stage.scaled(), lab::default_ladder(e));
    const auto est = dimension::slope_fit_trimmed(series);
    const double worst = spiral_certificate(ws, stage, e);
    const bool cert = worst <= e.eps;
    const double tol = cfg.num("lab.tolerance", slope_tolerance);
    o.artifacts.push_back({"spiral.csv", series_csv(series)});
    o.record = {{"arcs", stage.arcs.size()}, {"estimate", estimate_json(est)}, {"certificate_distance", worst},
                {"certificate", cert}};
    o.summary = "spiral: " + std::to_string(stage.arcs.size()) + " arcs, box-count slope " + fmt(est.slope) + " +- " +
                fmt(est.stderr_slope) + ", tube distance " + fmt(worst) + " <= eps " + fmt(e.eps) + " " +
                verdict_word(cert);
    o.status = cert ? 0 : 3;
    if (auto tau = linear_tau(e.rate)) {
        const auto v = predicted_exponent(pres);
        if (v) {
            const double pred = formulas::spiral_general(*v, e.target.v_n, *tau);
            const bool ok = std::fabs(est.slope - pred) <= tol;
            o.record["formula_eval"] = {{"theorem", "spiral"}, {"value", pred}, {"tolerance", tol}};
            o.summary += ", vs formula " + fmt(pred) + " (tolerance " + fmt(tol) + ") " + verdict_word(ok);
            if (!ok) o.status = 3;
        }
    }
    return o;
}

inline lab::HitMode hit_mode(const std::string& m) {
    if (m == "point") return lab::HitMode::point_proximity;
    if (m == "tube") return lab::HitMode::tube_dwell;
    if (m == "geodesic") return lab::HitMode::geodesic_shrinking;
    usage_error("lab.mode must be point, tube or geodesic");
}

inline Outcome run_zero_one(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const auto mode = hit_mode(cfg.str("lab.mode", "point"));
    Config c2 = cfg;
    if (!c2.has("lab.target")) c2.set("lab.target", mode == lab::HitMode::point_proximity ? "point" : "geodesic");
    const auto e = experiment(c2);
    lab_constants(o, e);
    o.constants["samples"] = e.samples;
    o.constants["horizon"] = e.horizon;
    const auto pres = presentation(cfg);
    const auto ws = lab::make_workspace(pres, e.target, e.horizon);
    const auto rep = lab::zero_one_monte_carlo(ws, e, mode);
    std::vector<std::vector<std::string>> rows, nrows;
    bool monotone = true;
    for (std::size_t i = 0; i < rep.horizons.size(); ++i) {
        rows.push_back({fmt(rep.horizons[i]), fmt(rep.fractions[i])});
        nrows.push_back({fmt(rep.horizons[i]), fmt(rep.new_hits[i])});
        if (i > 0 && rep.fractions[i] < rep.fractions[i - 1]) monotone = false;
    }
    o.artifacts.push_back({"zero_one.csv", csv("horizon,hit_fraction", rows)});
    o.artifacts.push_back({"zero_one_new.csv", csv("horizon,new_hit_fraction", nrows)});
    const bool diverges = rep.test.verdict == jb::Verdict::diverges;
    const double last = rep.fractions.empty() ? 0.0 : rep.fractions.back();
    const bool ok = diverges ? (last >= 0.9 && monotone) : rep.decay_factor >= 2.0;
    o.status = ok ? 0 : 3;
    o.record = {{"mode", lab::to_string(mode)},
                {"verdict", jb::to_string(rep.test.verdict)},
                {"integral_1e3", rep.test.integral_1e3},
                {"integral_1e6", rep.test.integral_1e6},
                {"final_fraction", last},
                {"sigma", rep.fractions.empty() ? 0.0 : rep.sigma(rep.fractions.size() - 1)},
                {"trend", rep.trend},
                {"decay_factor", rep.decay_factor},
                {"prediction", diverges ? "full measure" : "null set"}};
    o.summary = "zero-one: " + std::string(lab::to_string(mode)) + ", rate " + jb::to_string(e.rate) + ", integral " +
                jb::to_string(rep.test.verdict) + "; ";
    if (diverges)
        o.summary += "hit fraction " + fmt(last) + " at horizon " + fmt(rep.horizons.back()) + " (trend " + fmt(rep.trend) +
                     ", need >= 0.9 nondecreasing) " + verdict_word(ok);
    else
        o.summary += "new-hit decay factor " + fmt(rep.decay_factor) + " per unit depth (need >= 2) " + verdict_word(ok);
    return o;
}

inline Outcome run_intersect(const Config& cfg) {
    using namespace detail;
    Outcome o;
    const auto base = experiment(cfg);
    lab_constants(o, base);
    const auto taus = cfg.list("lab.taus", {0.5, 1.0});
    if (taus.size() < 2) usage_error("lab.taus needs at least two rates");
    std::vector<lab::ExperimentConfig> cfgs;
    for (double t : taus) {
        auto c = base;
        c.rate = jb::RateFunction::linear(t);
        cfgs.push_back(c);
    }
    const double reach = base.T2 + lab::stagger * static_cast<double>(taus.size() - 1);
    const auto pres = presentation(cfg);
    const auto ws = lab::make_workspace(pres, base.target, reach);
    const auto dy = boundary::build_dyadic(ws.ball, cfg.num("boundary.R", 1.0), cfg.num("boundary.delta", 1.0));
    const auto gen = cfg.integer("lab.generation", 4);
    if (gen < 1) usage_error("lab.generation must be positive");
    const std::size_t maxg = std::max<std::size_t>(static_cast<std::size_t>(gen), 6);
    const auto rep = lab::intersect_experiment(ws, cfgs, dy, maxg);
    std::vector<std::vector<std::string>> rows;
    double dens = -1.0;
    for (const auto& [g, f] : rep.density) {
        rows.push_back({std::to_string(g), fmt(f)});
        if (g == static_cast<std::size_t>(gen)) dens = f;
    }
    if (dens < 0.0) geometry_error("intersect: generation " + std::to_string(gen) + " was not built");
    o.artifacts.push_back({"intersect.csv", csv("generation,density_fraction", rows)});
    if (rep.empty) {
        o.status = 3;
        o.summary = "intersect: empty intersection FAIL";
        return o;
    }
    o.artifacts.push_back({"intersect_scales.csv", series_csv(rep.series)});
    std::vector<double> dims(taus.size(), static_cast<double>(base.target.s));
    const double pred = formulas::large_intersection(2.0, taus, dims, 1.0).lower;
    const double tol = cfg.num("lab.tolerance", slope_tolerance);
    const bool slope_ok = std::fabs(rep.estimate.slope - pred) <= tol;
    const bool dens_ok = dens >= 0.9;
    o.status = slope_ok && dens_ok ? 0 : 3;
    o.record = {{"pieces", rep.intersection.size()}, {"measure", rep.measure},
                {"estimate", estimate_json(rep.estimate)},
                {"formula_eval", {{"theorem", "thm1.4"}, {"value", pred}, {"tolerance", tol}}},
                {"density_generation", gen}, {"density", dens}};
    o.summary = "intersect: slope " + fmt(rep.estimate.slope) + " +- " + fmt(rep.estimate.stderr_slope) + " vs formula " +
                fmt(pred) + " " + verdict_word(slope_ok) + ", density " + fmt(dens) + " at generation " +
                std::to_string(gen) + " (need >= 0.9) " + verdict_word(dens_ok);
    return o;
}

inline Outcome run_formulas(const Config& cfg) {
    Outcome o;
    if (!cfg.has("formulas.theorem")) usage_error("formulas: --theorem is required (" + [] {
        std::string s;
        for (const auto& id : formulas::ids()) s += (s.empty() ? "" : ", ") + id;
        return s;
    }() + ")");
    const std::string id = cfg.str("formulas.theorem", "");
    formulas::Params p;
    p.n = cfg.num("formulas.n", p.n);
    p.s = cfg.num("formulas.s", p.s);
    p.tau = cfg.num("formulas.tau", p.tau);
    p.a = cfg.num("formulas.a", p.a);
    p.v_gamma = cfg.num("formulas.v_gamma", p.v_gamma);
    p.v_n = cfg.num("formulas.v_n", p.v_n);
    p.v_x = cfg.num("formulas.v_x", p.v_x);
    p.taus = cfg.list("formulas.taus", {});
    p.dims = cfg.list("formulas.dims", {});
    p.v_ns = cfg.list("formulas.v_ns", {});
    p.dims_prime = cfg.list("formulas.dims_prime", {});
    const auto v = formulas::evaluate(id, p);
    std::ostringstream os;
    os.precision(10);
    if (v.pair)
        os << v.lower << ' ' << v.upper;
    else
        os << v.lower;
    o.summary = os.str();
    o.record = {{"theorem", id}, {"lower", v.lower}, {"upper", v.upper}, {"pair", v.pair}};
    return o;
}

inline Outcome run(const std::string& sub, const Config& cfg) {
    static const std::map<std::string, std::function<Outcome(const Config&)>> table{
        {"orbit", run_orbit},          {"shadows", run_shadows},     {"dyadic-check", run_dyadic_check},
        {"whitney-check", run_whitney_check}, {"jb-bounds", run_jb_bounds}, {"dimension", run_dimension},
        {"zero-one", run_zero_one},    {"spiral", run_spiral},       {"intersect", run_intersect},
        {"formulas", run_formulas}};
    auto it = table.find(sub);
    if (it == table.end()) usage_error("unknown subcommand '" + sub + "'");
    cfg.check_known(known_keys());
    return it->second(cfg);
}

// Hash over the subcommand and every key outside [run].
inline std::string config_hash(const std::string& sub, const Config& cfg) {
    std::string text = sub + "\n";
    for (const auto& [k, e] : cfg.entries())
        if (k.rfind("run.", 0) != 0) text += k + "=" + e.value + "\n";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config::fnv1a(text)));
    return buf;
}

inline json manifest(const std::string& sub, const Config& cfg, const Outcome& o, const std::vector<std::string>& paths) {
    json c = o.constants;
    c["max_displacement"] = limits::max_displacement;
    c["sample_budget"] = max_samples;
    c["slope_tolerance"] = slope_tolerance;
    return {{"subcommand", sub},
            {"config_hash", config_hash(sub, cfg)},
            {"config", cfg.canonical()},
            {"seed", o.seed},
            {"constants", c},
            {"outputs", paths},
            {"budget_seconds", cfg.num("run.budget", 600.0)}};
}

// Runs, writes artifacts, manifest.json and summary.json under out_dir, prints the summary line.
inline int execute(const std::string& sub, const Config& cfg, const std::string& out_dir, std::ostream& out,
                   std::ostream& err) {
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const Outcome o = run(sub, cfg);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        std::vector<std::string> paths;
        for (const auto& a : o.artifacts) {
            const auto p = (fs::path(out_dir) / a.name).string();
            std::ofstream f(p, std::ios::binary);
            if (!f) resource_error("cannot write " + p);
            f << a.body;
            paths.push_back(p);
        }
        json summary = {{"subcommand", sub}, {"status", o.status}, {"summary", o.summary}, {"result", o.record}};
        const auto sp = (fs::path(out_dir) / "summary.json").string();
        std::ofstream(sp, std::ios::binary) << summary.dump(2) << "\n";
        paths.push_back(sp);
        const auto mp = (fs::path(out_dir) / "manifest.json").string();
        std::ofstream(mp, std::ios::binary) << manifest(sub, cfg, o, paths).dump(2) << "\n";
        out << o.summary << std::endl;
        const double budget = cfg.num("run.budget", 600.0);
        if (elapsed > budget) err << "warning: run took " << elapsed << " s, over the budget of " << budget << " s\n";
        return o.status;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return static_cast<int>(ErrorKind::resource);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::geometry);
    }
}

}  // namespace hyperlab::harness
