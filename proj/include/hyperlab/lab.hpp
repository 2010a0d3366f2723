#pragma once

// Shrinking-target and spiral-trap stages, zero-one Monte Carlo and stage intersections
// on closed-form rays from the origin.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hyperlab/arcs.hpp"
#include "hyperlab/boundary.hpp"
#include "hyperlab/dimension.hpp"
#include "hyperlab/group.hpp"
#include "hyperlab/jb.hpp"
#include "hyperlab/stats.hpp"

namespace hyperlab::lab {

using arcs::Arc;
using arcs::ArcSet;
using disk::Isometry;
using group::CosetTop;
using group::Presentation;
using group::Word;

inline constexpr double default_C = 4.0;
inline constexpr double stagger = 0.5;
inline constexpr double eps_guard = 0.5;
inline constexpr std::size_t max_stage_arcs = 20'000'000;

enum class TargetKind { point, closed_geodesic };

struct TargetSpec {
    TargetKind kind = TargetKind::point;
    Word h_word;  // closed geodesic: generator of the cyclic stabilizer
    int s = 0;
    double v_n = 0.0;

    static TargetSpec point() { return {}; }
    static TargetSpec closed_geodesic(Word h) { return {TargetKind::closed_geodesic, std::move(h), 1, 0.0}; }

    group::SubgroupSpec subgroup() const {
        if (kind == TargetKind::point) return group::SubgroupSpec::point_target();
        return group::SubgroupSpec::cyclic_word(h_word);
    }

    // Axis endpoints must be fixed by h.
    void validate(const Presentation& pres) const {
        if (kind == TargetKind::point) return;
        if (h_word.empty()) usage_error("closed-geodesic target needs a generator word");
        for (auto l : h_word)
            if (l >= pres.generators.size()) usage_error("target word uses a letter outside the presentation");
        const Isometry h = pres.evaluate(h_word);
        if (!h.is_hyperbolic(1e-6)) usage_error("closed-geodesic target: element is not hyperbolic");
        const auto [p, m] = h.fixed_points();
        for (const auto& xi : {p, m})
            if (disk::angle_gap(h.apply(xi).angle(), xi.angle()) > 1e-8)
                geometry_error("closed-geodesic target: axis endpoints are not fixed by h");
    }
};

struct ExperimentConfig {
    std::string presentation = "genus2";
    TargetSpec target;
    jb::RateFunction rate = jb::RateFunction::linear(1.0);
    double eps = 0.25;
    double T1 = 8.0;
    double T2 = 11.0;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    double C = default_C;
    double horizon = 12.0;
    std::vector<double> ladder;  // empty: derived from the window

    void validate() const {
        if (!(T1 < T2)) usage_error("experiment: depth window needs T1 < T2");
        if (T1 < 0.0) usage_error("experiment: depth window must be nonnegative");
        if (T2 > limits::max_displacement || horizon > limits::max_displacement)
            resource_error("experiment: depth beyond 30 exceeds the float guard");
        if (!(eps > 0.0) || !(eps < eps_guard)) usage_error("experiment: eps must lie in (0, 0.5)");
        if (!(C > 0.0)) usage_error("experiment: C must be positive");
    }

    double f(double t) const { return rate(t); }
    // Nominal scale of a stage arc at depth rho.
    double scale(double rho) const { return std::exp(-(rho + f(rho))); }
};

// Orbit ball and coset tops shared by all constructions over one presentation.
struct Workspace {
    Presentation pres;
    group::OrbitBall ball;
    TargetSpec target;
    std::vector<CosetTop> tops;
    double reach = 0.0;  // tops are complete up to this depth
};

inline Workspace make_workspace(const Presentation& pres, const TargetSpec& target, double T) {
    if (T > limits::max_displacement) resource_error("workspace: depth beyond 30 exceeds the float guard");
    target.validate(pres);
    Workspace ws{pres, {}, target, {}, T};
    double extra = 0.0;
    if (target.kind == TargetKind::closed_geodesic)
        extra = std::log(std::cosh(0.5 * pres.evaluate(target.h_word).translation_length())) + 0.01;
    ws.ball = group::orbit_ball(pres, T + extra);
    ws.tops = group::coset_tops(pres, ws.ball, target.subgroup(), T);
    group::check_top_separation(ws.tops);
    return ws;
}

struct StageArc {
    Arc arc;
    double scale = 0.0;
    double depth = 0.0;
    std::size_t source = 0;  // index into Workspace::tops
};

struct Stage {
    std::vector<StageArc> arcs;

    ArcSet set() const {
        std::vector<Arc> a;
        a.reserve(arcs.size());
        for (const auto& x : arcs) a.push_back(x.arc);
        return ArcSet::from_arcs(a);
    }

    std::vector<dimension::ScaledArc> scaled() const {
        std::vector<dimension::ScaledArc> out;
        out.reserve(arcs.size());
        for (const auto& x : arcs) out.push_back({x.arc, x.scale});
        return out;
    }
};

inline void check_window(const Workspace& ws, const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.T2 > ws.reach + 1e-9) usage_error("stage window reaches beyond the enumerated depth");
}

// Boundary directions of the points at signed distance +-len from the top along the translated axis.
inline std::pair<double, double> segment_shadow(const CosetTop& top, double len) {
    const Isometry m = Isometry::moving_origin_to(top.top);
    const Isometry back = m.inverse();
    const double psi = back.apply(top.axis.first).angle();
    const double r = std::tanh(0.5 * len);
    const double a = m.apply(disk::ModelPoint(std::polar(r, psi))).direction();
    const double b = m.apply(disk::ModelPoint(std::polar(r, psi + disk::pi))).direction();
    return {a, b};
}

// Point target: one arc per orbit point. Geodesic target: a colony of arcs strung along the
// shadow of the axis segment of length 2 around each top, spacing e^-(rho+f), radius C e^-(rho+f).
inline Stage shrinking_target_stage(const Workspace& ws, const ExperimentConfig& cfg) {
    check_window(ws, cfg);
    Stage st;
    for (std::size_t i = 0; i < ws.tops.size(); ++i) {
        const CosetTop& t = ws.tops[i];
        if (t.depth < cfg.T1 || t.depth > cfg.T2) continue;
        const double sc = cfg.scale(t.depth);
        const double r = std::min(1.0, cfg.C * sc);
        if (ws.target.kind == TargetKind::point || ws.target.s == 0) {
            st.arcs.push_back({boundary::visual_ball(t.top.direction(), r), sc, t.depth, i});
            continue;
        }
        const auto [a, b] = segment_shadow(t, 1.0);
        const double start = a + std::min(0.0, disk::signed_gap(a, b));
        const double span = disk::angle_gap(a, b);
        const double step = 2.0 * std::asin(std::min(1.0, sc));
        const auto count = static_cast<std::size_t>(std::floor(span / step)) + 1;
        if (st.arcs.size() + count > max_stage_arcs) resource_error("shrinking_target_stage: colony stage too large");
        for (std::size_t j = 0; j < count; ++j) {
            const double c = start + std::min(span, step * static_cast<double>(j));
            st.arcs.push_back({boundary::visual_ball(c, r), sc, t.depth, i});
        }
    }
    return st;
}

// Spiral-trap arc radius factor and the delay before the tube is entered.
inline double spiral_radius_factor(double eps) { return eps / 8.0; }
inline double spiral_entry_delay(double eps) { return std::log(8.0 / eps); }

// Two arcs per coset top, centered at the endpoints of the translated axis, radius c e^-(rho+f(rho)).
inline Stage spiral_trap_stage(const Workspace& ws, const ExperimentConfig& cfg) {
    check_window(ws, cfg);
    if (ws.target.kind != TargetKind::closed_geodesic) usage_error("spiral_trap_stage: target must be a closed geodesic");
    const double c = spiral_radius_factor(cfg.eps);
    Stage st;
    for (std::size_t i = 0; i < ws.tops.size(); ++i) {
        const CosetTop& t = ws.tops[i];
        if (t.depth < cfg.T1 || t.depth > cfg.T2) continue;
        const double sc = cfg.scale(t.depth);
        for (const auto& xi : {t.axis.first, t.axis.second})
            st.arcs.push_back({boundary::visual_ball(xi.angle(), std::min(1.0, c * sc)), sc, t.depth, i});
    }
    return st;
}

// Largest distance to the line along the ray towards theta over [t0, t1], sampled on a fine grid.
inline double max_distance_on_ray(double theta, const disk::GeodesicLine& line, double t0, double t1, int steps = 200) {
    double worst = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double t = t0 + (t1 - t0) * i / steps;
        worst = std::max(worst, disk::polar_distance_to_line(t, theta, line));
    }
    return worst;
}

// Closest approach of the ray towards theta to a point.
inline double ray_point_distance(double theta, const disk::ModelPoint& p) {
    const disk::GeodesicRay ray{disk::ModelPoint(), disk::BoundaryPoint(theta)};
    return disk::dist_to_geodesic(p, ray).distance;
}

// Half-width of the directions whose ray comes within r of a line with half-angle phi seen from 0.
inline double line_neighbourhood_half_width(double phi, double r) {
    const double c = std::cos(phi), s = std::sin(phi) * std::sinh(r);
    return std::acos(std::sqrt(std::max(0.0, c * c - s * s)));
}

// ---------------------------------------------------------------- zero-one

enum class HitMode { point_proximity, tube_dwell, geodesic_shrinking };

inline const char* to_string(HitMode m) {
    switch (m) {
        case HitMode::point_proximity: return "point";
        case HitMode::tube_dwell: return "tube";
        case HitMode::geodesic_shrinking: return "geodesic";
    }
    return "";
}

struct HitArc {
    Arc arc;
    double depth = 0.0;
};

// Directions meeting the target condition at the translate with top depth <= horizon.
inline std::vector<HitArc> hit_arcs(const Workspace& ws, const ExperimentConfig& cfg, HitMode mode) {
    if (cfg.horizon > ws.reach + 1e-9) usage_error("zero-one: horizon beyond the enumerated depth");
    if (mode == HitMode::point_proximity && ws.target.kind != TargetKind::point)
        usage_error("zero-one: point proximity needs a point target");
    if (mode != HitMode::point_proximity && ws.target.kind != TargetKind::closed_geodesic)
        usage_error("zero-one: tube and geodesic modes need a closed-geodesic target");
    std::vector<HitArc> out;
    const double c = spiral_radius_factor(cfg.eps);
    for (const auto& t : ws.tops) {
        if (t.depth <= 0.0 || t.depth > cfg.horizon) continue;
        const double f = cfg.f(t.depth);
        switch (mode) {
            case HitMode::point_proximity: {
                const double r = cfg.C * std::exp(-f);
                out.push_back({Arc::centered(t.top.direction(), boundary::shadow_half_width(t.depth, r)), t.depth});
                break;
            }
            case HitMode::tube_dwell: {
                const double r = std::min(1.0, c * std::exp(-(t.depth + f)));
                for (const auto& xi : {t.axis.first, t.axis.second})
                    out.push_back({boundary::visual_ball(xi.angle(), r), t.depth});
                break;
            }
            case HitMode::geodesic_shrinking: {
                const double phi = 0.5 * disk::angle_gap(t.axis.first.angle(), t.axis.second.angle());
                const double mid = t.axis.first.angle() + 0.5 * disk::signed_gap(t.axis.first.angle(), t.axis.second.angle());
                const double r = cfg.C * std::exp(-f);
                out.push_back({Arc::centered(mid, line_neighbourhood_half_width(phi, r)), t.depth});
                break;
            }
        }
    }
    return out;
}

struct ZeroOneReport {
    HitMode mode = HitMode::point_proximity;
    std::vector<double> horizons;
    std::vector<double> fractions;  // hit by some translate with depth <= horizon
    std::vector<double> new_hits;   // first hit in (horizon - 1, horizon]
    jb::IntegralTest test;
    double trend = 0.0;         // slope of fraction against horizon
    double decay_factor = 0.0;  // per unit depth, fitted on new hits over annuli 2..H
    std::size_t samples = 0;
    std::uint64_t seed = 0;

    double sigma(std::size_t i) const {
        const double p = fractions[i];
        return std::sqrt(std::max(p * (1.0 - p), 0.25 / static_cast<double>(samples)) / static_cast<double>(samples));
    }
};

inline std::vector<double> sample_directions(std::size_t n, std::uint64_t seed) {
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) {
        auto rng = stats::sample_rng(seed, i);
        out[i] = disk::two_pi * stats::uniform01(rng);
    });
    return out;
}

inline ZeroOneReport zero_one(const std::vector<HitArc>& arcs_in, const std::vector<double>& directions, int horizon) {
    if (directions.size() < 1000) usage_error("zero-one: needs at least 1000 samples");
    if (horizon < 1) usage_error("zero-one: horizon must be at least 1");
    const std::size_t S = directions.size();
    std::vector<std::pair<double, std::size_t>> sorted(S);
    for (std::size_t i = 0; i < S; ++i) sorted[i] = {directions[i], i};
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> first(S, std::numeric_limits<double>::infinity());
    auto mark = [&](double lo, double hi, double depth) {
        auto b = std::lower_bound(sorted.begin(), sorted.end(), std::make_pair(lo, std::size_t{0}));
        for (auto it = b; it != sorted.end() && it->first < hi; ++it)
            first[it->second] = std::min(first[it->second], depth);
    };
    for (const auto& h : arcs_in) {
        if (h.arc.full()) {
            mark(0.0, disk::two_pi, h.depth);
            continue;
        }
        const double s = disk::canonical_angle(h.arc.start), e = s + h.arc.length;
        if (e <= disk::two_pi) {
            mark(s, e, h.depth);
        } else {
            mark(s, disk::two_pi, h.depth);
            mark(0.0, e - disk::two_pi, h.depth);
        }
    }
    ZeroOneReport rep;
    rep.samples = S;
    std::vector<std::size_t> per(static_cast<std::size_t>(horizon) + 1, 0);
    for (double d : first)
        if (d <= horizon) ++per[static_cast<std::size_t>(std::max(1.0, std::ceil(d)))];
    std::size_t cum = 0;
    for (int h = 1; h <= horizon; ++h) {
        cum += per[h];
        rep.horizons.push_back(h);
        rep.fractions.push_back(static_cast<double>(cum) / static_cast<double>(S));
        rep.new_hits.push_back(static_cast<double>(per[h]) / static_cast<double>(S));
    }
    if (horizon >= 2) rep.trend = stats::least_squares(rep.horizons, rep.fractions).slope;
    std::vector<double> x, y;
    for (int h = 2; h <= horizon; ++h)
        if (per[h] > 0) {
            x.push_back(h);
            y.push_back(std::log(static_cast<double>(per[h])));
        }
    if (x.size() >= 2) rep.decay_factor = std::exp(-stats::least_squares(x, y).slope);
    return rep;
}

inline ZeroOneReport zero_one_monte_carlo(const Workspace& ws, const ExperimentConfig& cfg, HitMode mode) {
    cfg.validate();
    if (ws.pres.prune != group::PruneRule::dirichlet)
        usage_error("zero-one: uniform direction sampling is the boundary measure only for the cocompact genus-2 group");
    const auto arcs_hit = hit_arcs(ws, cfg, mode);
    auto rep = zero_one(arcs_hit, sample_directions(cfg.samples, cfg.seed), static_cast<int>(std::floor(cfg.horizon)));
    rep.mode = mode;
    rep.seed = cfg.seed;
    // Shadow masses are e^-(rho + f) against e^rho translates per unit depth: phi = f, n = 0, D = 1.
    rep.test = jb::borel_cantelli(cfg.rate, jb::RateFunction::constant(0.0), 1.0);
    if (mode == HitMode::geodesic_shrinking)
        rep.test = jb::borel_cantelli(jb::RateFunction::constant(0.0), jb::RateFunction::constant(0.0), 1.0);
    return rep;
}

// Conjugate every generator by m: the orbit of m G m^-1 from 0 is m G m^-1 0.
inline Presentation conjugate(const Presentation& pres, const Isometry& m) {
    Presentation out = pres;
    const Isometry mi = m.inverse();
    for (auto& g : out.generators) g = m * g * mi;
    if (pres.prune == group::PruneRule::dirichlet && m.displacement() > 1e-12)
        out.prune = group::PruneRule::margin;
    out.label = pres.label + "^m";
    return out;
}

// ---------------------------------------------------------------- intersections

// Ladder e^-(s0 + j/2) from the window's coarsest to finest nominal scale.
inline std::vector<double> default_ladder(const ExperimentConfig& cfg) {
    if (!cfg.ladder.empty()) return cfg.ladder;
    const double a = -std::log(cfg.scale(cfg.T1)), b = -std::log(cfg.scale(cfg.T2));
    const int n = static_cast<int>(std::floor((b - a) / 0.5 + 1e-9)) + 1;
    std::vector<double> out;
    for (int j = 0; j < n; ++j) out.push_back(std::exp(-(a + 0.5 * j)));
    return out;
}

namespace detail {

struct Piece {
    double lo, hi, scale;
};

inline std::vector<Piece> split(const std::vector<dimension::ScaledArc>& a) {
    std::vector<Piece> out;
    for (const auto& x : a) {
        if (x.arc.full()) {
            out.push_back({0.0, disk::two_pi, x.scale});
            continue;
        }
        const double s = disk::canonical_angle(x.arc.start), e = s + x.arc.length;
        if (e <= disk::two_pi) {
            out.push_back({s, e, x.scale});
        } else {
            out.push_back({s, disk::two_pi, x.scale});
            out.push_back({0.0, e - disk::two_pi, x.scale});
        }
    }
    std::sort(out.begin(), out.end(), [](const Piece& p, const Piece& q) { return p.lo < q.lo; });
    return out;
}

}  // namespace detail

// Pairwise overlaps; each overlap carries the finer of the two nominal scales.
inline std::vector<dimension::ScaledArc> intersect_scaled(const std::vector<dimension::ScaledArc>& a,
                                                          const std::vector<dimension::ScaledArc>& b) {
    const auto pa = detail::split(a), pb = detail::split(b);
    double maxlen = 0.0;
    for (const auto& p : pb) maxlen = std::max(maxlen, p.hi - p.lo);
    std::vector<dimension::ScaledArc> out;
    for (const auto& p : pa) {
        auto it = std::lower_bound(pb.begin(), pb.end(), p.lo - maxlen,
                                   [](const detail::Piece& q, double t) { return q.lo < t; });
        for (; it != pb.end() && it->lo < p.hi; ++it) {
            const double lo = std::max(p.lo, it->lo), hi = std::min(p.hi, it->hi);
            if (lo < hi) out.push_back({Arc{lo, hi - lo}, std::min(p.scale, it->scale)});
        }
    }
    return out;
}

struct IntersectReport {
    std::vector<Stage> stages;
    std::vector<ExperimentConfig> configs;  // with staggered windows
    std::vector<dimension::ScaledArc> intersection;
    ArcSet set;
    std::vector<double> stage_measures;
    double measure = 0.0;
    std::vector<std::pair<std::size_t, double>> density;  // generation, fraction meeting the intersection
    std::vector<std::pair<std::size_t, double>> meets_all;  // generation, fraction meeting every stage
    dimension::ScaleSeries series;
    dimension::DimensionEstimate estimate;
    bool empty = false;
};

// Config i shifted by i * stagger; stages by target kind; density scan on generations 1..max_generation.
inline IntersectReport intersect_experiment(const Workspace& ws, const std::vector<ExperimentConfig>& cfgs,
                                            const boundary::DiskDyadic& dy, std::size_t max_generation) {
    if (cfgs.size() < 2) usage_error("intersect: needs at least two configs");
    for (const auto& c : cfgs)
        if (c.presentation != cfgs[0].presentation) usage_error("intersect: configs must share the presentation");
    IntersectReport rep;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        ExperimentConfig c = cfgs[i];
        c.T1 += stagger * static_cast<double>(i);
        c.T2 += stagger * static_cast<double>(i);
        rep.configs.push_back(c);
        rep.stages.push_back(shrinking_target_stage(ws, c));
        rep.stage_measures.push_back(rep.stages.back().set().measure());
    }
    rep.intersection = rep.stages[0].scaled();
    for (std::size_t i = 1; i < rep.stages.size(); ++i)
        rep.intersection = intersect_scaled(rep.intersection, rep.stages[i].scaled());
    std::vector<Arc> a;
    for (const auto& x : rep.intersection) a.push_back(x.arc);
    rep.set = ArcSet::from_arcs(a);
    rep.measure = rep.set.measure();
    rep.empty = rep.set.empty();
    std::vector<ArcSet> sets;
    for (const auto& s : rep.stages) sets.push_back(s.set());
    for (std::size_t g = 1; g <= max_generation && g < dy.generations.size(); ++g) {
        rep.density.push_back({g, dimension::metric_density(rep.set, dy, g)});
        std::size_t hit = 0;
        for (const auto& cell : dy.generations[g]) {
            bool all = true;
            for (const auto& s : sets) all = all && s.intersects(cell.arc);
            hit += all;
        }
        rep.meets_all.push_back({g, dy.generations[g].empty() ? 0.0 : static_cast<double>(hit) / dy.generations[g].size()});
    }
    // Ladder of the finest config.
    std::size_t fine = 0;
    for (std::size_t i = 1; i < rep.configs.size(); ++i)
        if (rep.configs[i].scale(rep.configs[i].T2) < rep.configs[fine].scale(rep.configs[fine].T2)) fine = i;
    if (!rep.empty) {
        rep.series = dimension::box_count_matched(rep.intersection, default_ladder(rep.configs[fine]));
        rep.estimate = dimension::slope_fit_trimmed(rep.series);
    }
    return rep;
}

}  // namespace hyperlab::lab
