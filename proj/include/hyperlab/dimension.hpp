#pragma once

// Box counting, slope fits, Hausdorff content and metric density on boundary cell unions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <vector>

#include "hyperlab/arcs.hpp"
#include "hyperlab/boundary.hpp"
#include "hyperlab/stats.hpp"
#include "hyperlab/tree.hpp"

namespace hyperlab::dimension {

using arcs::Arc;
using arcs::ArcSet;

inline const double finest_scale = std::exp(-28.0);

struct ScaleSeries {
    std::vector<double> scales;  // decreasing
    std::vector<std::uint64_t> counts;
};

// Geometric ladder from coarse to fine: coarse * ratio^j, j = 0..steps-1.
inline std::vector<double> geometric_ladder(double coarse, double ratio, int steps) {
    std::vector<double> out;
    for (int j = 0; j < steps; ++j) out.push_back(coarse * std::pow(ratio, j));
    return out;
}

inline void check_ladder(const std::vector<double>& ladder) {
    for (double d : ladder) {
        if (!(d >= finest_scale * (1.0 - 1e-12)) || d > 1.0)
            usage_error("box_count: scale outside [e^-28, 1] is below float resolution or above the boundary size");
    }
}

// Number of mesh-delta grid intervals [k delta, (k+1) delta) of the angle circle meeting the set.
inline std::uint64_t grid_count(const ArcSet& set, double delta) {
    std::uint64_t n = 0;
    long last = -1;
    for (const auto& p : set.pieces()) {
        long a = static_cast<long>(std::floor(p.lo / delta));
        const long b = static_cast<long>(std::ceil(p.hi / delta)) - 1;
        if (a <= last) a = last + 1;
        if (b >= a) {
            n += static_cast<std::uint64_t>(b - a + 1);
            last = b;
        }
    }
    return n;
}

inline ScaleSeries box_count(const ArcSet& set, const std::vector<double>& ladder) {
    check_ladder(ladder);
    ScaleSeries s;
    for (double d : ladder) {
        s.scales.push_back(d);
        s.counts.push_back(grid_count(set, d));
    }
    return s;
}

// An arc tagged with the nominal scale of the construction that produced it.
struct ScaledArc {
    Arc arc;
    double scale = 0.0;
};

// Scale-matched count: at delta_j, the grid cells met by pieces whose nominal scale lies in
// [delta_j, delta_{j-1}). The coarsest rung uses the ratio of the first two rungs.
inline ScaleSeries box_count_matched(const std::vector<ScaledArc>& cells, const std::vector<double>& ladder) {
    check_ladder(ladder);
    if (ladder.size() < 2) usage_error("box_count_matched: ladder needs at least two scales");
    ScaleSeries s;
    const double ratio = ladder[0] / ladder[1];
    std::vector<ScaledArc> sorted = cells;
    std::sort(sorted.begin(), sorted.end(), [](const ScaledArc& a, const ScaledArc& b) { return a.scale < b.scale; });
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        const double lo = ladder[j];
        const double hi = j == 0 ? ladder[0] * ratio : ladder[j - 1];
        auto b = std::lower_bound(sorted.begin(), sorted.end(), lo,
                                  [](const ScaledArc& c, double t) { return c.scale < t; });
        auto e = std::lower_bound(sorted.begin(), sorted.end(), hi,
                                  [](const ScaledArc& c, double t) { return c.scale < t; });
        std::vector<Arc> band;
        for (auto it = b; it != e; ++it) band.push_back(it->arc);
        s.scales.push_back(lo);
        s.counts.push_back(grid_count(ArcSet::from_arcs(band), lo));
    }
    return s;
}

struct DimensionEstimate {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double r2 = 1.0;
    std::size_t first = 0;
    std::size_t last = 0;  // inclusive
    double coarse = 0.0;
    double fine = 0.0;
};

// Least squares of log N against log(1/delta) over rungs [first, last].
inline DimensionEstimate slope_fit(const ScaleSeries& s, std::size_t first, std::size_t last) {
    if (last >= s.scales.size() || last < first || last - first + 1 < 4)
        usage_error("slope_fit: window needs at least four ladder points");
    std::vector<double> x, y;
    for (std::size_t j = first; j <= last; ++j) {
        if (s.counts[j] == 0) usage_error("slope_fit: zero count inside the fit window");
        x.push_back(-std::log(s.scales[j]));
        y.push_back(std::log(static_cast<double>(s.counts[j])));
    }
    const auto f = stats::least_squares(x, y);
    return {f.slope, f.stderr_slope, f.r2, first, last, s.scales[first], s.scales[last]};
}

// Acceptance window: drop the two coarsest and two finest rungs.
inline DimensionEstimate slope_fit_trimmed(const ScaleSeries& s) {
    if (s.scales.size() < 8) usage_error("slope_fit: trimmed window needs at least eight rungs");
    return slope_fit(s, 2, s.scales.size() - 3);
}

struct ContentEstimate {
    double t = 0.0;
    double floor = 0.0;
    double value = 0.0;
    bool tree_exact = false;
};

// Greedy merge-then-cover: start from one cover element per piece (never below the floor),
// then merge neighbouring elements while the hull costs no more than the pair.
inline ContentEstimate content(const ArcSet& set, double t, double floor) {
    ContentEstimate est{t, floor, 0.0, false};
    const auto comps = set.components();
    const std::size_t m = comps.size();
    if (m == 0) return est;
    auto cost = [&](double length) { return std::pow(std::max(disk::angle_to_visual_radius(0.5 * length), floor), t); };
    if (m == 1) {
        est.value = cost(comps[0].length);
        return est;
    }
    // Groups on a cycle: each group spans from the start of its first component to the end of its last.
    struct Group {
        double start, length, value;
        std::size_t prev, next;
        bool alive;
        std::uint32_t version;
    };
    std::vector<Group> g(m);
    for (std::size_t i = 0; i < m; ++i)
        g[i] = {comps[i].start, comps[i].length, cost(comps[i].length), (i + m - 1) % m, (i + 1) % m, true, 0};
    auto hull_len = [&](std::size_t i) {
        const std::size_t j = g[i].next;
        return disk::canonical_angle(g[j].start - g[i].start) + g[j].length;
    };
    struct Cand {
        double gain;
        std::size_t i;
        std::uint32_t vi, vj;
        bool operator<(const Cand& o) const { return gain < o.gain; }
    };
    std::priority_queue<Cand> pq;
    auto push = [&](std::size_t i) {
        const std::size_t j = g[i].next;
        if (i == j) return;
        const double hl = hull_len(i);
        if (hl >= disk::two_pi) return;
        const double gain = g[i].value + g[j].value - cost(hl);
        if (gain >= 0.0) pq.push({gain, i, g[i].version, g[j].version});
    };
    for (std::size_t i = 0; i < m; ++i) push(i);
    std::size_t alive = m;
    while (!pq.empty() && alive > 1) {
        const Cand c = pq.top();
        pq.pop();
        const std::size_t i = c.i;
        if (!g[i].alive || g[i].version != c.vi) continue;
        const std::size_t j = g[i].next;
        if (!g[j].alive || g[j].version != c.vj || i == j) continue;
        const double hl = hull_len(i);
        g[i].length = hl;
        g[i].value = cost(hl);
        ++g[i].version;
        g[j].alive = false;
        g[i].next = g[j].next;
        g[g[j].next].prev = i;
        --alive;
        push(i);
        push(g[i].prev);
    }
    double total = 0.0;
    for (const auto& x : g)
        if (x.alive) total += x.value;
    // A single cover by the whole boundary (diameter 1) is always available.
    est.value = std::min(total, 1.0);
    return est;
}

// Exact content on the tree over cylinder covers, recursion stopped at floor_depth.
// The set is a union of cylinders. f(v) = min(diam(C(v))^t, sum over children).
class TreeContent {
public:
    TreeContent(const tree::FreeGroup& group, std::vector<tree::Word> cells, int floor_depth)
        : group_(group), floor_(floor_depth) {
        for (auto& w : cells) set_.emplace(w, true);
    }

    ContentEstimate evaluate(double t) const {
        ContentEstimate est{t, std::exp(-static_cast<double>(floor_)), 0.0, true};
        est.value = solve(tree::Word{}, t);
        return est;
    }

private:
    // 0: disjoint from the set, 1: partial, 2: C(v) inside the set.
    int status(const tree::Word& v) const {
        for (std::size_t k = 0; k <= v.size(); ++k)
            if (set_.count(tree::Word(v.begin(), v.begin() + static_cast<long>(k)))) return 2;
        auto it = set_.lower_bound(v);
        if (it != set_.end() && tree::is_prefix(v, it->first)) return 1;
        return 0;
    }

    double solve(const tree::Word& v, double t) const {
        const int st = status(v);
        if (st == 0) return 0.0;
        const double own = std::exp(-t * static_cast<double>(v.size()));
        if (static_cast<int>(v.size()) >= floor_) return own;
        double sum = 0.0;
        for (const auto& c : group_.children(v)) {
            sum += solve(c, t);
            if (sum >= own) return own;
        }
        return std::min(own, sum);
    }

    tree::FreeGroup group_;
    int floor_;
    std::map<tree::Word, bool> set_;
};

inline ContentEstimate content_tree(const tree::FreeGroup& group, const std::vector<tree::Word>& cells, double t,
                                    int floor_depth) {
    return TreeContent(group, cells, floor_depth).evaluate(t);
}

struct CoverSearch {
    double value = 0.0;
    std::uint64_t covers = 0;
};

// Lists every irredundant cylinder cover down to floor_depth and takes the cheapest.
// A cover is built per node meeting the set: the node itself, or one cover of each child meeting the set.
inline CoverSearch content_tree_exhaustive(const tree::FreeGroup& group, const std::vector<tree::Word>& cells,
                                           double t, int floor_depth, std::uint64_t max_covers = 10000) {
    auto meets = [&](const tree::Word& v) {
        for (const auto& w : cells)
            if (tree::is_prefix(v, w) || tree::is_prefix(w, v)) return true;
        return false;
    };
    using Cover = std::vector<tree::Word>;
    std::function<std::vector<Cover>(const tree::Word&)> all = [&](const tree::Word& v) {
        std::vector<Cover> out{Cover{v}};
        if (static_cast<int>(v.size()) >= floor_depth) return out;
        std::vector<Cover> prod{Cover{}};
        for (const auto& c : group.children(v)) {
            if (!meets(c)) continue;
            const auto sub = all(c);
            if (prod.size() * sub.size() > max_covers) resource_error("content_tree_exhaustive: more than the cover budget");
            std::vector<Cover> next;
            for (const auto& p : prod)
                for (const auto& s : sub) {
                    Cover x = p;
                    x.insert(x.end(), s.begin(), s.end());
                    next.push_back(std::move(x));
                }
            prod = std::move(next);
        }
        for (auto& p : prod) out.push_back(std::move(p));
        if (out.size() > max_covers) resource_error("content_tree_exhaustive: more than the cover budget");
        return out;
    };
    CoverSearch res;
    if (cells.empty()) return res;
    const auto covers = all(tree::Word{});
    res.covers = covers.size();
    res.value = std::numeric_limits<double>::infinity();
    for (const auto& cov : covers) {
        double s = 0.0;
        for (const auto& w : cov) s += std::exp(-t * static_cast<double>(w.size()));
        res.value = std::min(res.value, s);
    }
    return res;
}

struct ModifiedContent {
    std::vector<double> eps;
    std::vector<double> values;  // content at t + eps
    double value = 0.0;          // supremum over the ladder
};

inline const std::vector<double>& default_eps_ladder() {
    static const std::vector<double> l{0.05, 0.02, 0.01};
    return l;
}

template <class ContentAt>
ModifiedContent modified_content(ContentAt&& at, double t, const std::vector<double>& eps) {
    ModifiedContent m;
    for (double e : eps) {
        m.eps.push_back(e);
        m.values.push_back(at(t + e));
        m.value = std::max(m.value, m.values.back());
    }
    return m;
}

inline ModifiedContent modified_content(const ArcSet& set, double t, double floor,
                                        const std::vector<double>& eps = default_eps_ladder()) {
    return modified_content([&](double s) { return content(set, s, floor).value; }, t, eps);
}

// Fraction of generation-n dyadic cells sharing a point with the set.
inline double metric_density(const ArcSet& set, const boundary::DiskDyadic& dy, std::size_t n) {
    if (n >= dy.generations.size()) usage_error("metric_density: generation not built");
    const auto& gen = dy.generations[n];
    if (gen.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& c : gen)
        if (set.intersects(c.arc)) ++hit;
    return static_cast<double>(hit) / static_cast<double>(gen.size());
}

}  // namespace hyperlab::dimension
