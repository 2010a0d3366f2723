#pragma once

// Shadows, boundary measures, dyadic decompositions and Whitney decompositions.
//
// Disk cells are half-open arcs; tree cells are cylinders C(w) of reduced words.
// Both backends use the origin (resp. root) as base point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlab/arcs.hpp"
#include "hyperlab/disk.hpp"
#include "hyperlab/group.hpp"
#include "hyperlab/tree.hpp"

namespace hyperlab::boundary {

using arcs::Arc;
using arcs::ArcSet;
using disk::pi;
using disk::two_pi;
using tree::Letter;
using tree::Word;

// Visual diameter of an arc seen from the origin.
inline double diameter(const Arc& a) { return a.visual_diameter(); }

// Visual diameter of the cylinder C(w): e^{-|w|}.
inline double diameter(const Word& w) { return std::exp(-static_cast<double>(w.size())); }

// ---------------------------------------------------------------- shadows

struct Shadow {
    Word word;
    double R = 0.0;
    double depth = 0.0;
    Arc cell;
    bool full = false;  // the ball contains the base point
};

inline double shadow_half_width(double rho, double R) {
    if (rho <= R) return pi;
    return std::asin(std::min(1.0, std::sinh(R) / std::sinh(rho)));
}

inline Shadow shadow(const group::OrbitElement& e, double R) {
    Shadow s;
    s.word = e.word;
    s.R = R;
    s.depth = e.rho;
    s.full = e.rho <= R;
    s.cell = s.full ? Arc{0.0, two_pi} : Arc::centered(e.g.orbit_direction(), shadow_half_width(e.rho, R));
    return s;
}

struct TreeShadow {
    Word vertex;
    Word cylinder;
    bool full = false;
};

// Cylinder of the vertex R steps before g on the geodesic from the root.
inline TreeShadow shadow(const Word& g, int R) {
    TreeShadow s;
    s.vertex = g;
    const long keep = static_cast<long>(g.size()) - R;
    s.full = keep <= 0;
    s.cylinder = s.full ? Word{} : Word(g.begin(), g.begin() + keep);
    return s;
}

// ---------------------------------------------------------------- measures

enum class MeasureKind { lebesgue, tree_uniform, schottky_recursive };

// Normalized arc length: the boundary measure class of a cocompact disk group.
struct LebesgueMeasure {
    double D = 1.0;
    double of(const Arc& a) const { return std::min(a.length, two_pi) / two_pi; }
    double of(const ArcSet& s) const { return s.measure(); }
};

// Uniform cylinder mass on the boundary of the (2k)-regular tree.
struct TreeMeasure {
    int rank = 2;
    double D() const { return std::log(2.0 * rank - 1.0); }
    double of(const Word& w) const {
        if (w.empty()) return 1.0;
        return 1.0 / (2.0 * rank) * std::pow(2.0 * rank - 1.0, -static_cast<double>(w.size() - 1));
    }
};

// Attracting arc of a generator: the inside of the isometric circle of its inverse.
inline Arc attracting_arc(const disk::Isometry& s) {
    return Arc::centered(s.orbit_direction(), std::atan(1.0 / std::abs(s.b())));
}

// Patterson-Sullivan proxy for a Schottky group: recursive mass splitting down the
// cylinder tree with weights exp(-v * displacement increment), renormalized per level.
class SchottkyMeasure {
public:
    SchottkyMeasure(const group::Presentation& pres, double v, int depth) : v_(v), depth_(depth) {
        if (depth < 1 || depth > 14) usage_error("schottky measure depth must be in [1, 14]");
        struct Frame {
            disk::Isometry g;
            Letter last;
            double mass;
            int level;
        };
        const int alphabet = 2 * pres.rank();
        std::vector<Arc> base;
        for (const auto& s : pres.generators) base.push_back(attracting_arc(s));
        std::vector<Frame> stack{{disk::Isometry::identity(), 255, 1.0, 0}};
        while (!stack.empty()) {
            const Frame f = stack.back();
            stack.pop_back();
            const double rho0 = f.g.displacement();
            std::vector<Frame> kids;
            double total = 0.0;
            for (int l = 0; l < alphabet; ++l) {
                if (f.last != 255 && static_cast<Letter>(l) == pres.inverse(f.last)) continue;
                const disk::Isometry h = f.g * pres.generators[l];
                const double w = std::exp(-v_ * (h.displacement() - rho0));
                kids.push_back({h, static_cast<Letter>(l), w, f.level + 1});
                total += w;
            }
            for (auto& k : kids) {
                k.mass = f.mass * k.mass / total;
                if (k.level == depth_) {
                    // The cylinder arc is the image of the last letter's attracting arc.
                    const disk::Isometry prefix = k.g * pres.generators[pres.inverse(k.last)];
                    const Arc& b = base[k.last];
                    const double s = prefix.apply(disk::BoundaryPoint(b.start)).angle();
                    const double e = prefix.apply(disk::BoundaryPoint(b.start + b.length)).angle();
                    cells_.push_back({s, disk::canonical_angle(e - s), k.mass});
                } else {
                    stack.push_back(k);
                }
            }
        }
        // Split wrapping cells so the list lives inside [0, 2pi).
        std::vector<Cell> flat;
        for (const auto& c : cells_) {
            if (c.start + c.length <= two_pi) {
                flat.push_back(c);
            } else {
                const double first = two_pi - c.start;
                flat.push_back({c.start, first, c.mass * first / c.length});
                flat.push_back({0.0, c.length - first, c.mass * (c.length - first) / c.length});
            }
        }
        std::sort(flat.begin(), flat.end(), [](const Cell& a, const Cell& b) { return a.start < b.start; });
        cells_ = std::move(flat);
        prefix_.assign(cells_.size() + 1, 0.0);
        for (std::size_t i = 0; i < cells_.size(); ++i) prefix_[i + 1] = prefix_[i] + cells_[i].mass;
    }

    double D() const { return v_; }
    int depth() const { return depth_; }
    double total() const { return prefix_.back(); }

    double of(const Arc& a) const {
        if (a.full()) return total();
        const double s = disk::canonical_angle(a.start);
        const double e = s + a.length;
        if (e <= two_pi) return mass_in(s, e);
        return mass_in(s, two_pi) + mass_in(0.0, e - two_pi);
    }

    // Sample a boundary point distributed (up to deepest-cylinder resolution) by the measure.
    double sample(double u01, double v01) const {
        const double target = u01 * total();
        auto it = std::upper_bound(prefix_.begin(), prefix_.end(), target);
        std::size_t i = static_cast<std::size_t>(std::max<long>(0, (it - prefix_.begin()) - 1));
        i = std::min(i, cells_.size() - 1);
        return disk::canonical_angle(cells_[i].start + v01 * cells_[i].length);
    }

    std::size_t cells() const { return cells_.size(); }

private:
    struct Cell {
        double start;
        double length;
        double mass;
    };

    // Mass in [lo, hi) with linear interpolation inside the deepest cylinders.
    double mass_in(double lo, double hi) const {
        if (hi <= lo || cells_.empty()) return 0.0;
        auto cmp = [](double t, const Cell& c) { return t < c.start; };
        std::size_t i0 = static_cast<std::size_t>(std::upper_bound(cells_.begin(), cells_.end(), lo, cmp) - cells_.begin());
        if (i0 > 0) --i0;
        const std::size_t i1 =
            static_cast<std::size_t>(std::lower_bound(cells_.begin(), cells_.end(), hi,
                                                      [](const Cell& c, double t) { return c.start < t; }) -
                                     cells_.begin());
        if (i1 <= i0) return 0.0;
        double m = prefix_[i1] - prefix_[i0];
        for (std::size_t i : {i0, i1 - 1}) {
            const double cs = cells_[i].start, ce = cs + cells_[i].length;
            const double ov = std::max(0.0, std::min(hi, ce) - std::max(lo, cs));
            m -= cells_[i].mass * (1.0 - ov / cells_[i].length);
            if (i0 == i1 - 1) break;
        }
        return std::max(0.0, m);
    }

    double v_;
    int depth_;
    std::vector<Cell> cells_;
    std::vector<double> prefix_;
};

// Visual ball B(xi, r) about a boundary angle.
inline Arc visual_ball(double theta, double r) { return Arc::centered(theta, disk::visual_radius_to_angle(r)); }

// Largest violation factor max(mu/r^D, r^D/mu) over the given balls.
template <class Measure>
double regularity_constant(const Measure& mu, double D, const std::vector<std::pair<double, double>>& balls) {
    double c = 1.0;
    for (const auto& [theta, r] : balls) {
        const double m = mu.of(visual_ball(theta, r));
        const double q = m / std::pow(r, D);
        if (!(q > 0.0)) return std::numeric_limits<double>::infinity();
        c = std::max(c, std::max(q, 1.0 / q));
    }
    return c;
}

// Hyperbolic distance between the pairing geodesics of two neighbouring Schottky generators.
inline double pairing_gap(const group::Presentation& pres) {
    double best = std::numeric_limits<double>::infinity();
    const int alphabet = 2 * pres.rank();
    for (int i = 0; i < alphabet; ++i) {
        for (int j = i + 1; j < alphabet; ++j) {
            const Arc a = attracting_arc(pres.generators[i]), b = attracting_arc(pres.generators[j]);
            if (arcs::arcs_meet(a, b)) geometry_error("pairing arcs overlap");
            const disk::GeodesicLine lb{disk::BoundaryPoint(b.start), disk::BoundaryPoint(b.start + b.length)};
            // Distance from line a to line b: convex along a, golden-section search.
            const disk::BoundaryPoint p(a.start), q(a.start + a.length);
            const auto mid = disk::dist_to_geodesic(disk::ModelPoint(), disk::GeodesicLine{p, q});
            const disk::Isometry m = disk::Isometry::moving_origin_to(mid.foot);
            const double dir = m.inverse().apply(q).angle();
            auto f = [&](double s) {
                const disk::ModelPoint z = m.apply(disk::ModelPoint::from_polar(std::fabs(s), s >= 0 ? dir : dir + pi));
                return disk::dist_to_geodesic(z, lb).distance;
            };
            double lo = -25.0, hi = 25.0;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            for (int it = 0; it < 200; ++it) {
                const double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
                if (f(x1) < f(x2))
                    hi = x2;
                else
                    lo = x1;
            }
            best = std::min(best, f(0.5 * (lo + hi)));
        }
    }
    return best;
}

// ---------------------------------------------------------------- dyadic decompositions

struct DiskCell {
    Arc arc;
    std::string provenance;  // "shadow:<word>" or "synthetic"
};

struct AxiomReport {
    bool coverage = false;
    bool centered = false;
    bool nesting = false;
    bool overlap = false;
    bool ratio = false;
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    int n0 = 1;
    double max_gap = 0.0;            // largest uncovered angle in any generation
    std::vector<double> max_diam;    // per generation
    std::vector<double> raw_gap;     // uncovered measure of the selected shadows, per generation
    std::string failure;

    bool all() const { return coverage && centered && nesting && overlap && ratio; }
};

struct DiskDyadic {
    double R = 1.0;
    double delta = 1.0;
    std::vector<std::vector<DiskCell>> generations;  // each sorted by start angle; a partition
    AxiomReport report;
};

struct TreeDyadic {
    int rank = 2;
    int depth = 0;
    std::vector<std::vector<Word>> generations;
    AxiomReport report;
};

namespace detail {

// Cells between consecutive cut angles (sorted, in [0, 2pi)).
inline std::vector<Arc> cells_from_cuts(const std::vector<double>& cuts) {
    std::vector<Arc> out;
    if (cuts.size() <= 1) {
        out.push_back({cuts.empty() ? 0.0 : cuts[0], two_pi});
        return out;
    }
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const double s = cuts[i];
        const double e = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + two_pi;
        out.push_back({s, e - s});
    }
    return out;
}

inline void sort_unique_cuts(std::vector<double>& cuts) {
    for (auto& c : cuts) c = disk::canonical_angle(c);
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out;
    for (double c : cuts)
        if (out.empty() || c - out.back() > 1e-14) out.push_back(c);
    if (out.size() > 1 && out.front() + two_pi - out.back() <= 1e-14) out.pop_back();
    cuts = std::move(out);
}

// Union of fixed and movable cuts, then removal of movable cuts bounding cells shorter than
// min_len (shortest cells first). Fixed cuts are never removed.
inline std::vector<double> merge_slivers(const std::vector<double>& fixed, const std::vector<double>& movable,
                                         double min_len) {
    std::vector<std::pair<double, bool>> cuts;
    for (double c : fixed) cuts.push_back({disk::canonical_angle(c), true});
    for (double c : movable) cuts.push_back({disk::canonical_angle(c), false});
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<double, bool>> uniq;
    for (const auto& c : cuts) {
        if (!uniq.empty() && c.first - uniq.back().first <= 1e-14) {
            uniq.back().second = uniq.back().second || c.second;
            continue;
        }
        uniq.push_back(c);
    }
    cuts = std::move(uniq);
    for (bool changed = true; changed && cuts.size() > 2;) {
        changed = false;
        const std::size_t n = cuts.size();
        auto len = [&](std::size_t i) { return disk::canonical_angle(cuts[(i + 1) % n].first - cuts[i].first); };
        std::size_t worst = n;
        double wl = min_len;
        for (std::size_t i = 0; i < n; ++i) {
            const double l = len(i);
            if (l >= wl) continue;
            if (cuts[i].second && cuts[(i + 1) % n].second) continue;
            worst = i;
            wl = l;
        }
        if (worst == n) break;
        // Drop the movable end whose other neighbour is shorter.
        const std::size_t left = worst, right = (worst + 1) % n;
        const double lprev = len((worst + n - 1) % n), lnext = len(right);
        std::size_t drop;
        if (cuts[left].second)
            drop = right;
        else if (cuts[right].second)
            drop = left;
        else
            drop = lprev < lnext ? left : right;
        cuts.erase(cuts.begin() + static_cast<long>(drop));
        changed = true;
    }
    std::vector<double> out;
    for (const auto& c : cuts) out.push_back(c.first);
    return out;
}

}  // namespace detail

// Standalone predicates. Each returns true on success and writes the witness into the report.

inline bool check_coverage(const std::vector<std::vector<DiskCell>>& gens, AxiomReport& rep) {
    rep.max_gap = 0.0;
    rep.max_diam.clear();
    for (std::size_t n = 0; n < gens.size(); ++n) {
        std::vector<Arc> arcs;
        double dmax = 0.0;
        for (const auto& c : gens[n]) {
            arcs.push_back(c.arc);
            dmax = std::max(dmax, diameter(c.arc));
        }
        rep.max_diam.push_back(dmax);
        const ArcSet u = ArcSet::from_arcs(arcs);
        for (const auto& g : u.complement().pieces()) rep.max_gap = std::max(rep.max_gap, g.length());
        if (gens[n].empty() || u.complement().total_length() > 1e-12) {
            rep.failure = "coverage: generation " + std::to_string(n) + " leaves a gap";
            return false;
        }
    }
    if (gens.size() > 1 && !(rep.max_diam.back() < rep.max_diam.front())) {
        rep.failure = "coverage: diameters do not shrink";
        return false;
    }
    return true;
}

// Best A for one arc with its midpoint x as center: B(x, d/A) inside Q inside B(x, A d).
inline double centered_constant(const Arc& a) {
    if (a.full()) return 1.0;
    const double d = diameter(a);
    const double reach = std::sin(std::min(0.25 * a.length, 0.5 * pi));  // farthest point from x
    return std::max({1.0, d / reach, reach / d});
}

inline bool check_centered(const std::vector<std::vector<DiskCell>>& gens, AxiomReport& rep) {
    rep.A = 1.0;
    for (const auto& g : gens)
        for (const auto& c : g) rep.A = std::max(rep.A, centered_constant(c.arc));
    return std::isfinite(rep.A);
}

// Index of the cell of a sorted partition holding angle theta.
inline std::size_t cell_holding(const std::vector<DiskCell>& gen, double theta) {
    theta = disk::canonical_angle(theta);
    auto it = std::upper_bound(gen.begin(), gen.end(), theta,
                               [](double t, const DiskCell& c) { return t < c.arc.start; });
    return it == gen.begin() ? gen.size() - 1 : static_cast<std::size_t>(it - gen.begin()) - 1;
}

// Calls f(index) for every cell of a sorted partition sharing a point with the half-open arc q.
template <class F>
void for_each_meeting(const std::vector<DiskCell>& gen, const Arc& q, F&& f) {
    if (gen.empty()) return;
    if (q.full()) {
        for (std::size_t i = 0; i < gen.size(); ++i) f(i);
        return;
    }
    const std::size_t i = cell_holding(gen, q.start);
    f(i);
    for (std::size_t k = 1; k < gen.size(); ++k) {
        const std::size_t j = (i + k) % gen.size();
        if (disk::canonical_angle(gen[j].arc.start - q.start) < q.length - 1e-13)
            f(j);
        else
            break;
    }
}

inline std::size_t count_meeting(const std::vector<DiskCell>& gen, const Arc& q) {
    std::size_t count = 0;
    for_each_meeting(gen, q, [&](std::size_t) { ++count; });
    return count;
}

inline std::size_t parent_index(const std::vector<DiskCell>& coarse, const Arc& child) {
    return cell_holding(coarse, child.start + 0.5 * child.length);
}

inline bool check_nesting(const std::vector<std::vector<DiskCell>>& gens, int n0, AxiomReport& rep) {
    rep.n0 = n0;
    for (std::size_t n = static_cast<std::size_t>(n0); n < gens.size(); ++n) {
        const auto& coarse = gens[n - n0];
        for (const auto& c : gens[n]) {
            const std::size_t p = parent_index(coarse, c.arc);
            if (!arcs::arc_within(c.arc, coarse[p].arc, 1e-13)) {
                std::ostringstream os;
                os << "nesting: generation " << n << " cell at " << c.arc.start << " is not inside any generation "
                   << n - n0 << " cell";
                rep.failure = os.str();
                return false;
            }
        }
    }
    return true;
}

inline bool check_overlap(const std::vector<std::vector<DiskCell>>& gens, AxiomReport& rep) {
    rep.B = 1.0;
    for (std::size_t n = 0; n < gens.size(); ++n) {
        for (const auto& q : gens[n]) {
            for (std::size_t m = n; m < gens.size(); ++m) {
                const std::size_t cnt = count_meeting(gens[m], q.arc);
                const std::size_t l = m - n;
                if (l == 0) {
                    if (cnt != 1) {
                        rep.failure = "overlap: generation " + std::to_string(n) + " cells intersect each other";
                        return false;
                    }
                    continue;
                }
                rep.B = std::max(rep.B, std::pow(static_cast<double>(cnt), 1.0 / static_cast<double>(l)));
            }
        }
    }
    return true;
}

inline bool check_ratio(const std::vector<std::vector<DiskCell>>& gens, AxiomReport& rep) {
    rep.C = 1.0;
    for (std::size_t n = 0; n + 1 < gens.size(); ++n) {
        double lo0 = 1e300, hi0 = 0.0, lo1 = 1e300, hi1 = 0.0;
        for (const auto& c : gens[n]) {
            lo0 = std::min(lo0, diameter(c.arc));
            hi0 = std::max(hi0, diameter(c.arc));
        }
        for (const auto& c : gens[n + 1]) {
            lo1 = std::min(lo1, diameter(c.arc));
            hi1 = std::max(hi1, diameter(c.arc));
        }
        rep.C = std::max({rep.C, hi0 / lo1, hi1 / lo0});
    }
    return std::isfinite(rep.C);
}

inline AxiomReport verify(const std::vector<std::vector<DiskCell>>& gens, int n0 = 1) {
    AxiomReport rep;
    rep.coverage = check_coverage(gens, rep);
    rep.centered = check_centered(gens, rep);
    rep.nesting = check_nesting(gens, n0, rep);
    rep.overlap = check_overlap(gens, rep);
    rep.ratio = check_ratio(gens, rep);
    return rep;
}

// Generation n: greedy maximal subfamily of shadows with rho in [n delta, (n+1) delta),
// turned into a partition by cutting between neighbours and refined by the previous generation.
inline DiskDyadic build_dyadic(const group::OrbitBall& ball, double R, double delta) {
    if (!(delta > 0.0)) usage_error("build_dyadic: bucket width must be positive");
    if (ball.cutoff < 4.0 * delta) usage_error("build_dyadic: orbit ball must reach at least four buckets");
    DiskDyadic out;
    out.R = R;
    out.delta = delta;
    const std::size_t ngen = static_cast<std::size_t>(std::floor(ball.cutoff / delta + 1e-12));
    std::vector<std::vector<Shadow>> buckets(ngen);
    for (const auto& e : ball.elements) {
        const auto k = static_cast<std::size_t>(std::floor(e.rho / delta));
        if (k < ngen) buckets[k].push_back(shadow(e, R));
    }
    std::vector<double> inherited;  // cut angles of the previous generation
    std::vector<DiskCell> previous{{Arc{0.0, two_pi}, "synthetic"}};
    for (std::size_t n = 0; n < ngen; ++n) {
        auto& cand = buckets[n];
        std::stable_sort(cand.begin(), cand.end(), [](const Shadow& a, const Shadow& b) {
            if (a.cell.length != b.cell.length) return a.cell.length > b.cell.length;
            return a.word < b.word;
        });
        std::vector<const Shadow*> sel;
        bool has_full = false;
        std::vector<Arc> chosen;
        // Selected arcs are kept sorted by start to answer "is this center covered" quickly.
        std::vector<Arc> sorted;
        auto covered = [&](double theta) {
            if (sorted.empty()) return false;
            auto it = std::upper_bound(sorted.begin(), sorted.end(), theta,
                                       [](double t, const Arc& a) { return t < a.start; });
            // Arcs are short except the first few; check a window around the position.
            const std::size_t pos = static_cast<std::size_t>(it - sorted.begin());
            for (std::size_t k = 0; k < sorted.size() && k < 64; ++k) {
                const Arc& a = sorted[(pos + sorted.size() - 1 - k) % sorted.size()];
                if (a.contains(theta)) return true;
            }
            for (const Arc& a : chosen)
                if (a.length > 0.5 && a.contains(theta)) return true;
            return false;
        };
        for (const auto& s : cand) {
            if (s.full) {
                has_full = true;
                sel.assign(1, &s);
                break;
            }
            const double c = s.cell.center();
            if (covered(c)) continue;
            sel.push_back(&s);
            chosen.push_back(s.cell);
            sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), s.cell.start,
                                           [](double t, const Arc& a) { return t < a.start; }),
                          s.cell);
        }
        double raw_uncovered = 1.0;
        std::vector<DiskCell> cells;
        if (has_full) {
            raw_uncovered = 0.0;
            cells.push_back({Arc{0.0, two_pi}, "shadow:" + tree::to_string(sel[0]->word)});
            inherited.clear();
        } else if (sel.size() < 2) {
            // Nothing new at this scale: carry the previous generation.
            if (!sel.empty()) raw_uncovered = 1.0 - sel[0]->cell.length / two_pi;
            cells = previous;
        } else {
            raw_uncovered = ArcSet::from_arcs(chosen).complement().measure();
            std::sort(sel.begin(), sel.end(),
                      [](const Shadow* a, const Shadow* b) { return a->cell.center() < b->cell.center(); });
            std::vector<double> own;
            for (std::size_t i = 0; i < sel.size(); ++i) {
                const Shadow& a = *sel[i];
                const Shadow& b = *sel[(i + 1) % sel.size()];
                const double gap = disk::canonical_angle(b.cell.center() - a.cell.center());
                const double ha = 0.5 * a.cell.length, hb = 0.5 * b.cell.length;
                double m = 0.5 * (ha + gap - hb);
                m = std::clamp(m, 0.25 * gap, 0.75 * gap);
                own.push_back(a.cell.center() + m);
            }
            detail::sort_unique_cuts(own);
            // Snap the nearest own cut onto each inherited cut.
            std::vector<bool> dropped(own.size(), false);
            for (double p : inherited) {
                auto it = std::lower_bound(own.begin(), own.end(), p);
                std::size_t best = own.size();
                double bd = 1e300;
                for (int d = -1; d <= 0; ++d) {
                    const std::size_t idx =
                        (static_cast<std::size_t>(it - own.begin()) + own.size() + static_cast<std::size_t>(d + 0)) %
                        own.size();
                    for (std::size_t cand_idx : {idx, (idx + 1) % own.size()}) {
                        const double dd = disk::angle_gap(own[cand_idx], p);
                        if (!dropped[cand_idx] && dd < bd) {
                            bd = dd;
                            best = cand_idx;
                        }
                    }
                }
                if (best < own.size()) dropped[best] = true;
            }
            std::vector<double> own_len;
            for (std::size_t i = 0; i < own.size(); ++i)
                own_len.push_back(disk::canonical_angle(own[(i + 1) % own.size()] - own[i]));
            std::nth_element(own_len.begin(), own_len.begin() + own_len.size() / 2, own_len.end());
            std::vector<double> kept;
            for (std::size_t i = 0; i < own.size(); ++i)
                if (!dropped[i]) kept.push_back(own[i]);
            const std::vector<double> cuts = detail::merge_slivers(inherited, kept, 0.5 * own_len[own_len.size() / 2]);
            // Label each cell by the selected shadow nearest to its midpoint.
            std::vector<double> centers;
            for (const Shadow* s : sel) centers.push_back(s->cell.center());
            for (const Arc& a : detail::cells_from_cuts(cuts)) {
                const double mid = a.center();
                auto it = std::lower_bound(centers.begin(), centers.end(), mid);
                std::size_t i1 = static_cast<std::size_t>(it - centers.begin()) % centers.size();
                std::size_t i0 = (i1 + centers.size() - 1) % centers.size();
                const std::size_t pick = disk::angle_gap(centers[i0], mid) < disk::angle_gap(centers[i1], mid) ? i0 : i1;
                cells.push_back({a, "shadow:" + tree::to_string(sel[pick]->word)});
            }
            inherited = cuts;
        }
        std::sort(cells.begin(), cells.end(), [](const DiskCell& a, const DiskCell& b) { return a.arc.start < b.arc.start; });
        out.report.raw_gap.push_back(raw_uncovered);
        out.generations.push_back(cells);
        previous = std::move(cells);
    }
    const auto raw = out.report.raw_gap;
    out.report = verify(out.generations, 1);
    out.report.raw_gap = raw;
    return out;
}

// Tree: W_n = all depth-n cylinders. Predicates are exact integer checks.
inline TreeDyadic build_dyadic(const tree::FreeGroup& group, int depth) {
    if (depth < 1 || group.ball_size(depth) > 5'000'000ull) usage_error("build_dyadic: tree depth out of range");
    TreeDyadic out;
    out.rank = group.rank();
    out.depth = depth;
    for (int n = 0; n <= depth; ++n) out.generations.push_back(group.sphere(n));
    AxiomReport& rep = out.report;
    // Coverage: the depth-n cylinders partition the boundary exactly when there are 2k(2k-1)^{n-1} of them.
    rep.coverage = true;
    for (int n = 0; n <= depth; ++n) {
        rep.max_diam.push_back(std::exp(-static_cast<double>(n)));
        if (out.generations[n].size() != group.sphere_size(n)) rep.coverage = false;
    }
    // Closed balls of radius e^{-n} about any point of C(w) equal C(w).
    rep.A = 1.0;
    rep.centered = true;
    rep.n0 = 1;
    rep.nesting = true;
    for (int n = 1; n <= depth; ++n)
        for (const auto& w : out.generations[n])
            if (!group.is_reduced(w) || w.size() != static_cast<std::size_t>(n)) rep.nesting = false;
    // Cells of generation n + l meeting C(w) are its descendants (prefix relation).
    rep.overlap = true;
    rep.B = 1.0;
    for (int n = 0; n <= depth; ++n) {
        for (int m = n; m <= depth; ++m) {
            const Word& w = out.generations[n].front();
            std::uint64_t cnt = 0;
            for (const auto& v : out.generations[m]) cnt += tree::is_prefix(w, v);
            if (m == n && cnt != 1) rep.overlap = false;
            if (m > n) rep.B = std::max(rep.B, std::pow(static_cast<double>(cnt), 1.0 / (m - n)));
        }
    }
    rep.C = std::exp(1.0);
    rep.ratio = true;
    return out;
}

// Lemma-type overlap count: cells of comparable diameter (ratio within [1/R, R]) meeting the
// R diam(Q)-neighbourhood of Q; the maximum over Q.
inline std::size_t overlap_count(const DiskDyadic& dy, double R) {
    std::size_t worst = 0;
    std::vector<std::pair<double, double>> range;  // per generation min/max diameter
    for (const auto& g : dy.generations) {
        double lo = 1e300, hi = 0.0;
        for (const auto& c : g) {
            lo = std::min(lo, diameter(c.arc));
            hi = std::max(hi, diameter(c.arc));
        }
        range.emplace_back(lo, hi);
    }
    for (std::size_t n = 0; n < dy.generations.size(); ++n) {
        for (const auto& q : dy.generations[n]) {
            const double d = diameter(q.arc);
            const double grow = disk::visual_radius_to_angle(R * d);
            const Arc nb = q.arc.full() || q.arc.length + 2 * grow >= two_pi
                               ? Arc{0.0, two_pi}
                               : Arc{q.arc.start - grow, q.arc.length + 2 * grow};
            std::size_t cnt = 0;
            for (std::size_t m = 0; m < dy.generations.size(); ++m) {
                if (range[m].second < d / R || range[m].first > d * R) continue;
                if (m == n && R == 1.0) {
                    ++cnt;
                    continue;
                }
                for_each_meeting(dy.generations[m], nb, [&](std::size_t j) {
                    const double dc = diameter(dy.generations[m][j].arc);
                    if (dc >= d / R && dc <= d * R) ++cnt;
                });
            }
            worst = std::max(worst, cnt);
        }
    }
    return worst;
}

// ---------------------------------------------------------------- Whitney decompositions

// An open subset of the circle given by its open component arcs (a, a + length).
// A component of length 2pi is the circle minus the point a.
struct OpenSet {
    std::vector<Arc> components;

    static OpenSet circle_minus_point(double p) { return {{Arc{disk::canonical_angle(p), two_pi}}}; }
    bool empty() const { return components.empty(); }
    bool whole() const { return false; }
};

struct WhitneyCell {
    std::size_t generation = 0;
    DiskCell cell;
    double diam = 0.0;
    double dist = 0.0;  // visual distance to the complement of U
};

struct WhitneyReport {
    double A = 12.0;
    double B = 0.0;               // witnessed: max dist / (A diam)
    double min_ratio = 0.0;       // min dist / diam
    double covered = 0.0;         // measure of U covered by the cells
    bool inequality = false;      // diam <= dist / A <= B diam for all cells
    bool unique_points = false;   // every cell has a point lying in no other cell
    std::vector<WhitneyCell> cells;
};

// Angular gap from arc q to the complement, if q lies in the open component c; else negative.
inline double gap_inside(const Arc& q, const Arc& c) {
    const double off = disk::canonical_angle(q.start - c.start);
    if (c.length >= two_pi) {
        // Circle minus a point: q must avoid the point c.start.
        if (q.full()) return -1.0;
        if (off == 0.0 || off + q.length > two_pi) return -1.0;
        return std::min(off, two_pi - off - q.length);
    }
    if (off <= 0.0 || off + q.length >= c.length) return -1.0;
    return std::min(off, c.length - off - q.length);
}

inline WhitneyReport whitney(const OpenSet& U, const DiskDyadic& dy, double A) {
    if (!(A > 10.0)) usage_error("whitney: the constant A must exceed 10");
    WhitneyReport rep;
    rep.A = A;
    if (U.empty()) {
        rep.inequality = rep.unique_points = true;
        return rep;
    }
    double min_comp = two_pi;
    for (const auto& c : U.components) min_comp = std::min(min_comp, c.length);
    if (dy.report.max_diam.empty() || dy.report.max_diam.back() >= disk::angle_to_visual_radius(0.5 * min_comp) / A)
        resource_error("whitney: decomposition too shallow for the components of U");
    // The generations are nested partitions, so a cell is maximal iff its parent is not admissible.
    auto dist_of = [&](const Arc& q) {
        for (const auto& c : U.components) {
            const double g = gap_inside(q, c);
            if (g >= 0.0) return std::sin(0.5 * std::min(g, pi));
        }
        return -1.0;
    };
    std::vector<std::vector<char>> taken(dy.generations.size());
    for (std::size_t n = 0; n < dy.generations.size(); ++n) {
        const auto& gen = dy.generations[n];
        taken[n].assign(gen.size(), 0);
        for (std::size_t i = 0; i < gen.size(); ++i) {
            const auto& c = gen[i];
            bool under = false;
            if (n > 0) {
                const std::size_t p = parent_index(dy.generations[n - 1], c.arc);
                under = taken[n - 1][p] != 0;
            }
            if (under) {
                taken[n][i] = 2;  // covered by a selected ancestor
                continue;
            }
            const double d = dist_of(c.arc);
            const double diam = diameter(c.arc);
            if (d > 0.0 && A * diam <= d) {
                taken[n][i] = 1;
                rep.cells.push_back({n, c, diam, d});
            }
        }
    }
    rep.inequality = true;
    rep.B = 0.0;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    std::vector<Arc> arcs;
    for (const auto& w : rep.cells) {
        rep.B = std::max(rep.B, w.dist / (A * w.diam));
        rep.min_ratio = std::min(rep.min_ratio, w.dist / w.diam);
        if (!(w.diam <= w.dist / A)) rep.inequality = false;
        arcs.push_back(w.cell.arc);
    }
    if (!std::isfinite(rep.B)) rep.inequality = false;
    // Nested-partition selection yields pairwise disjoint cells; check it directly.
    const ArcSet u = ArcSet::from_arcs(arcs);
    double total = 0.0;
    for (const auto& a : arcs) total += a.length;
    rep.unique_points = std::fabs(u.total_length() - total) < 1e-9;
    double umeasure = 0.0;
    for (const auto& c : U.components) umeasure += c.length;
    rep.covered = umeasure > 0.0 ? u.total_length() / umeasure : 0.0;
    return rep;
}

struct TreeWhitneyCell {
    Word cylinder;
    double diam = 0.0;
    double dist = 0.0;
};

struct TreeWhitneyReport {
    double A = 12.0;
    double B = 0.0;
    bool inequality = false;
    bool unique_points = false;
    bool tiles = false;  // the cells partition U exactly
    std::vector<TreeWhitneyCell> cells;
};

// U = C(w). Every cylinder inside U has visual distance e^{-(|w|-1)} to the complement.
inline TreeWhitneyReport whitney(const tree::FreeGroup& group, const Word& w, double A) {
    if (!(A > 10.0)) usage_error("whitney: the constant A must exceed 10");
    if (w.empty()) usage_error("whitney: U must be a proper subset of the boundary");
    TreeWhitneyReport rep;
    rep.A = A;
    const double dist = std::exp(-static_cast<double>(w.size() - 1));
    // Smallest depth n with A e^{-n} <= dist.
    int n = static_cast<int>(w.size());
    while (A * std::exp(-static_cast<double>(n)) > dist * (1.0 + 1e-12)) ++n;
    std::vector<Word> layer{w};
    for (int d = static_cast<int>(w.size()); d < n; ++d) {
        std::vector<Word> next;
        for (const auto& v : layer)
            for (auto& c : group.children(v)) next.push_back(std::move(c));
        layer = std::move(next);
    }
    for (auto& v : layer) rep.cells.push_back({v, diameter(v), dist});
    rep.inequality = true;
    for (const auto& c : rep.cells) {
        rep.B = std::max(rep.B, c.dist / (A * c.diam));
        if (!(c.diam <= c.dist / A * (1.0 + 1e-12))) rep.inequality = false;
    }
    // Same-depth cylinders are disjoint; their count times the cell mass equals the mass of U.
    TreeMeasure mu{group.rank()};
    double sum = 0.0;
    for (const auto& c : rep.cells) sum += mu.of(c.cylinder);
    rep.unique_points = true;
    rep.tiles = std::fabs(sum - mu.of(w)) < 1e-12 * mu.of(w);
    return rep;
}

// ---------------------------------------------------------------- export

inline void export_dyadic(std::ostream& os, const DiskDyadic& dy) {
    os.precision(17);
    for (std::size_t n = 0; n < dy.generations.size(); ++n)
        for (const auto& c : dy.generations[n])
            os << "gen " << n << ' ' << c.arc.start << ' ' << disk::canonical_angle(c.arc.start + c.arc.length)
               << ' ' << c.provenance << '\n';
}

inline void export_dyadic(std::ostream& os, const TreeDyadic& dy) {
    for (std::size_t n = 0; n < dy.generations.size(); ++n)
        for (const auto& w : dy.generations[n]) os << "gen " << n << ' ' << tree::to_string(w) << '\n';
}

}  // namespace hyperlab::boundary
