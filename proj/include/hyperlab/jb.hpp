#pragma once

// Dirichlet systems, colonies and the exponents alpha, beta, omega; dimension bounds,
// the Borel-Cantelli integral test, finite stages and a one-branch Cantor certifier.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "hyperlab/arcs.hpp"
#include "hyperlab/boundary.hpp"
#include "hyperlab/group.hpp"
#include "hyperlab/parallel.hpp"
#include "hyperlab/tree.hpp"

namespace hyperlab::jb {

using arcs::Arc;
using arcs::ArcSet;
using arcs::ArcUnion;
using Rational = boost::rational<std::int64_t>;

inline constexpr double alpha_step = 0.01;
inline constexpr double alpha_max = 40.0;
inline constexpr std::size_t max_colony_balls = 2'000'000;

// Fraction of mu(F) a colony has to capture.
inline double capture_fraction(double D) { return std::pow(10.0, -D); }

template <class Measure>
double measure_of(const Measure& mu, const ArcSet& s) {
    double m = 0.0;
    for (const auto& c : s.components()) m += mu.of(c);
    return m;
}

// ---------------------------------------------------------------- disk systems

struct DirBall {
    std::string id;
    double center = 0.0;  // boundary angle
    double radius = 0.0;  // visual radius
    double depth = 0.0;

    Arc arc() const { return boundary::visual_ball(center, radius); }
};

struct DirichletSystem {
    std::vector<DirBall> balls;  // sorted by depth
    double D = 1.0;
    // mu(B(xi, r)) ~ regularity * r^D for small r; beta is computed with mu / regularity.
    double regularity = 2.0 / disk::pi;

    void validate() const {
        for (const auto& b : balls)
            if (!(b.radius > 0.0) || b.radius > 1.0) usage_error("dirichlet system: radius outside (0, 1]");
        for (std::size_t i = 1; i < balls.size(); ++i)
            if (balls[i].depth < balls[i - 1].depth) usage_error("dirichlet system: balls must be sorted by depth");
    }

    // Smallest radius per unit depth bucket; strictly decreasing along buckets for a valid enumeration.
    std::vector<double> min_radius_by_bucket() const {
        std::map<long, double> m;
        for (const auto& b : balls) {
            const long k = static_cast<long>(std::floor(b.depth));
            auto [it, fresh] = m.emplace(k, b.radius);
            if (!fresh) it->second = std::min(it->second, b.radius);
        }
        std::vector<double> out;
        for (const auto& [k, r] : m) out.push_back(r);
        return out;
    }
};

// Disk radius kappa e^-rho covers the shadow of a ball of radius asinh(kappa).
inline const double default_kappa = std::sinh(2.5);

inline DirichletSystem dirichlet_from_orbit(const group::OrbitBall& ball, double min_depth = 2.0,
                                            double kappa = default_kappa, double D = 1.0) {
    DirichletSystem sys;
    sys.D = D;
    for (const auto& e : ball.elements) {
        if (e.rho < min_depth) continue;
        const double r = kappa * std::exp(-e.rho);
        if (r > 1.0) continue;
        sys.balls.push_back({tree::to_string(e.word), e.g.orbit_direction(), r, e.rho});
    }
    sys.validate();
    return sys;
}

struct Colony {
    std::size_t index = 0;
    double radius = 0.0;           // common visual radius
    std::vector<double> centers;   // in F(x) and in Dir(x)
    double mass = 0.0;             // sum of ball measures

    Arc ball(std::size_t i) const { return boundary::visual_ball(centers[i], radius); }
};

struct AlphaBeta {
    double alpha = 1.0;
    double beta = 0.0;
    double mu_F = 0.0;    // normalized by the system's regularity constant
    double mu_dir = 0.0;
    Colony colony;
};

namespace detail {

// Maximal greedy packing of F by balls of angular half-width w, components by decreasing measure.
// Long components are packed from the inside; short ones get one ball at the midpoint if it is free.
template <class Measure>
Colony pack(const Measure& mu, const std::vector<Arc>& comps, const std::vector<double>& masses, double radius,
            double limit) {
    Colony col;
    col.radius = radius;
    const double w = disk::visual_radius_to_angle(radius);
    std::vector<std::size_t> order(comps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return masses[a] > masses[b]; });
    ArcUnion used;
    for (std::size_t i : order) {
        const Arc& c = comps[i];
        // Arc endpoints carry absolute angle rounding, hence the relative slack.
        if (c.length >= 2.0 * w * (1.0 - 1e-7)) {
            const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(c.length / (2.0 * w) + 1e-7)));
            if (col.centers.size() + count > max_colony_balls) resource_error("alpha_beta: colony too large");
            for (std::size_t j = 0; j < count; ++j) {
                const double ctr = c.start + w + 2.0 * w * static_cast<double>(j);
                col.centers.push_back(disk::canonical_angle(ctr));
                col.mass += mu.of(Arc::centered(ctr, w));
            }
            used.insert(Arc{c.start, 2.0 * w * static_cast<double>(count)});
        } else {
            const Arc b = Arc::centered(c.center(), w);
            if (used.meets(b)) continue;
            used.insert(b);
            col.centers.push_back(c.center());
            col.mass += mu.of(b);
        }
        // Past the upper bound the packing can only fail.
        if (col.mass > limit) break;
    }
    return col;
}

}  // namespace detail

// alpha_x on the 0.01 grid: least alpha whose maximal greedy packing by balls of radius r^alpha
// has total measure in [mu(F)/10^D, mu(F)].
template <class Measure = boundary::LebesgueMeasure>
AlphaBeta alpha_beta(const DirichletSystem& sys, std::size_t x, const std::vector<Arc>& F,
                     const Measure& mu = Measure{}) {
    if (x >= sys.balls.size()) usage_error("alpha_beta: index out of range");
    const DirBall& dir = sys.balls[x];
    const Arc dir_arc = dir.arc();
    const ArcSet fset = ArcSet::from_arcs(F);
    const auto comps = fset.components();
    for (const auto& c : comps)
        if (!arcs::arc_within(c, dir_arc, 1e-12)) usage_error("alpha_beta: F(x) is not inside Dir(x)");
    std::vector<double> masses;
    double mu_F = 0.0;
    for (const auto& c : comps) {
        masses.push_back(mu.of(c));
        mu_F += masses.back();
    }
    if (!(mu_F > 0.0)) usage_error("alpha_beta: degenerate input, mu(F(x)) = 0");
    const double mu_dir = mu.of(dir_arc);
    if (!(mu_dir < sys.regularity) || dir.radius >= 1.0)
        usage_error("alpha_beta: Dir(x) is too large for a defined beta");

    const double lower = mu_F * capture_fraction(sys.D) * (1.0 - 1e-12);
    const double upper = mu_F * (1.0 + 1e-6);
    for (int j = 0;; ++j) {
        const double alpha = 1.0 + alpha_step * j;
        if (alpha > alpha_max) geometry_error("alpha_beta: no grid exponent up to 40 packs F(x)");
        const double rad = std::pow(dir.radius, alpha);
        if (!(rad > 0.0)) geometry_error("alpha_beta: packing radius underflow");
        Colony col = detail::pack(mu, comps, masses, rad, upper);
        if (col.mass >= lower && col.mass <= upper) {
            col.index = x;
            AlphaBeta out;
            out.alpha = alpha;
            out.mu_F = mu_F / sys.regularity;
            out.mu_dir = mu_dir / sys.regularity;
            out.beta = sys.D * (alpha - std::log(out.mu_F) / std::log(out.mu_dir));
            out.colony = std::move(col);
            return out;
        }
    }
}

struct IndexExponents {
    std::size_t index = 0;
    std::string id;
    double center = 0.0;
    double radius = 0.0;
    AlphaBeta value;
};

template <class T>
struct Aggregates {
    T alpha_sup{};
    T alpha_inf{};
    T beta_sup{};
    T beta_inf{};
};

struct ExponentReport {
    std::vector<IndexExponents> rows;
    Aggregates<double> agg;
    double D = 1.0;
};

template <class T>
Aggregates<T> aggregate(const std::vector<T>& alpha, const std::vector<T>& beta) {
    if (alpha.empty() || alpha.size() != beta.size()) usage_error("aggregate: empty or mismatched exponent lists");
    Aggregates<T> a{alpha[0], alpha[0], beta[0], beta[0]};
    for (std::size_t i = 1; i < alpha.size(); ++i) {
        a.alpha_sup = std::max(a.alpha_sup, alpha[i]);
        a.alpha_inf = std::min(a.alpha_inf, alpha[i]);
        a.beta_sup = std::max(a.beta_sup, beta[i]);
        a.beta_inf = std::min(a.beta_inf, beta[i]);
    }
    return a;
}

// F is parallel to sys.balls; indices with an empty F are skipped.
template <class Measure = boundary::LebesgueMeasure>
ExponentReport exponent_report(const DirichletSystem& sys, const std::vector<std::vector<Arc>>& F,
                               const Measure& mu = Measure{}) {
    if (F.size() != sys.balls.size()) usage_error("exponent_report: F must list one colony per index");
    std::vector<std::optional<AlphaBeta>> slot(F.size());
    parallel_for(F.size(), [&](std::size_t i) {
        if (!F[i].empty()) slot[i] = alpha_beta(sys, i, F[i], mu);
    });
    ExponentReport rep;
    rep.D = sys.D;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (!slot[i]) continue;
        rep.rows.push_back({i, sys.balls[i].id, sys.balls[i].center, sys.balls[i].radius, std::move(*slot[i])});
        a.push_back(rep.rows.back().value.alpha);
        b.push_back(rep.rows.back().value.beta);
    }
    rep.agg = aggregate(a, b);
    return rep;
}

// One record per index: id, center, radius, alpha, beta.
inline void write_report(std::ostream& os, const ExponentReport& rep) {
    os << "id,center,radius,alpha,beta\n";
    os.precision(12);
    for (const auto& r : rep.rows)
        os << r.id << ',' << r.center << ',' << r.radius << ',' << r.value.alpha << ',' << r.value.beta << '\n';
}

// ---------------------------------------------------------------- tree systems

struct TreeAlphaBeta {
    Rational alpha;
    std::optional<Rational> beta_over_D;  // rational exactly when the cylinder count is a power of 2k-1
    double beta_over_D_value = 0.0;
    int packing_depth = 0;
    std::uint64_t balls = 0;
    Rational nu_F;  // normalized mass (2k-1)^-|w| per cylinder
    Rational nu_dir;
    std::vector<tree::Word> colony;  // listed up to 100000 cylinders
};

inline std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > std::numeric_limits<std::int64_t>::max() / b) resource_error("tree exponents: depth overflows int64");
        r *= b;
    }
    return r;
}

// Canonical form: drop cells under other cells, then merge complete sibling families.
inline std::vector<tree::Word> canonical_cylinders(const tree::FreeGroup& group, std::vector<tree::Word> cells) {
    std::set<tree::Word> s(cells.begin(), cells.end());
    std::vector<tree::Word> kept;
    for (const auto& w : s) {
        bool covered = false;
        for (std::size_t k = 0; k < w.size() && !covered; ++k)
            covered = s.count(tree::Word(w.begin(), w.begin() + static_cast<long>(k))) > 0;
        if (!covered) kept.push_back(w);
    }
    std::set<tree::Word> cur(kept.begin(), kept.end());
    for (bool changed = true; changed;) {
        changed = false;
        std::map<tree::Word, std::size_t> kids;
        for (const auto& w : cur)
            if (!w.empty()) ++kids[tree::Word(w.begin(), w.end() - 1)];
        for (const auto& [parent, n] : kids) {
            if (n != group.children(parent).size()) continue;
            for (const auto& c : group.children(parent)) cur.erase(c);
            cur.insert(parent);
            changed = true;
        }
    }
    return {cur.begin(), cur.end()};
}

// Cylinder system: Dir(x) = C(x), F(x) a union of cylinders under x. Balls of radius e^-d are
// depth-d cylinders, so the infimum alpha is d/n for the least d where F is a union of depth-d cylinders.
inline TreeAlphaBeta alpha_beta_tree(const tree::FreeGroup& group, const tree::Word& x,
                                     const std::vector<tree::Word>& F) {
    const int n = static_cast<int>(x.size());
    if (n < 1) usage_error("alpha_beta_tree: Dir(x) must be a proper cylinder");
    if (F.empty()) usage_error("alpha_beta_tree: degenerate input, mu(F(x)) = 0");
    for (const auto& w : F) {
        if (!tree::is_prefix(x, w)) usage_error("alpha_beta_tree: F(x) is not inside Dir(x)");
        if (!group.is_reduced(w)) usage_error("alpha_beta_tree: cylinder word is not reduced");
    }
    const auto canon = canonical_cylinders(group, F);
    int d = n;
    for (const auto& w : canon) d = std::max(d, static_cast<int>(w.size()));
    const std::int64_t m = 2 * static_cast<std::int64_t>(group.rank()) - 1;
    std::int64_t j = 0;
    for (const auto& w : canon) j += ipow(m, d - static_cast<int>(w.size()));
    TreeAlphaBeta out;
    out.alpha = Rational(d, n);
    out.packing_depth = d;
    out.balls = static_cast<std::uint64_t>(j);
    out.nu_F = Rational(j, ipow(m, d));
    out.nu_dir = Rational(1, ipow(m, n));
    // beta / D = alpha - log nu(F) / log nu(Dir) = log_m(j) / n.
    int e = 0;
    std::int64_t p = 1;
    while (p < j) {
        p *= m;
        ++e;
    }
    if (p == j) out.beta_over_D = Rational(e, n);
    out.beta_over_D_value = std::log(static_cast<double>(j)) / std::log(static_cast<double>(m)) / n;
    std::vector<tree::Word> frontier = canon;
    for (auto& w : frontier) {
        std::vector<tree::Word> level{w};
        while (static_cast<int>(level.front().size()) < d && level.size() <= 100000) {
            std::vector<tree::Word> next;
            for (const auto& v : level)
                for (auto& c : group.children(v)) next.push_back(std::move(c));
            level = std::move(next);
        }
        for (auto& v : level)
            if (out.colony.size() < 100000) out.colony.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------- omega

struct ProbeBall {
    double center = 0.0;
    double radius = 0.0;  // visual
};

inline constexpr int omega_infinite = -1;

struct OmegaProbe {
    ProbeBall ball;
    std::vector<double> ks;
    std::vector<int> omegas;  // omega_k per k; omega_infinite when no admissible collection exists
    int proxy = omega_infinite;
};

struct OmegaReport {
    double c = 0.0;
    std::vector<OmegaProbe> probes;
    int omega_bar = omega_infinite;
    bool infinite() const { return omega_bar == omega_infinite; }
};

// Least integer w >= 1 with radius >= c / k^w.
inline int omega_exponent(double radius, double c, double k) {
    if (radius >= c / k) return 1;
    return std::max(1, static_cast<int>(std::ceil(std::log(c / radius) / std::log(k) - 1e-12)));
}

inline int proxy_of(const std::vector<int>& omegas) {
    if (omegas.empty()) return omega_infinite;
    int out = 0;
    for (std::size_t i = omegas.size() >= 2 ? omegas.size() - 2 : 0; i < omegas.size(); ++i) {
        if (omegas[i] == omega_infinite) return omega_infinite;
        out = std::max(out, omegas[i]);
    }
    return out;
}

inline int combine_probes(const std::vector<OmegaProbe>& probes) {
    int out = 0;
    for (const auto& p : probes) {
        if (p.proxy == omega_infinite) return omega_infinite;
        out = std::max(out, p.proxy);
    }
    return probes.empty() ? omega_infinite : out;
}

// The (c,k)-admissible collection minimizing sup omega: ck-maximal Dirichlet balls centered in B,
// inside B/2, radius <= 1/(ck), added by decreasing radius until they carry c mu(B).
template <class Measure = boundary::LebesgueMeasure>
OmegaReport omega(const DirichletSystem& sys, double c, const std::vector<ProbeBall>& probes,
                  const std::vector<double>& ks, const Measure& mu = Measure{}) {
    if (!(c > 0.0) || c > 1.0) usage_error("omega: c must lie in (0, 1]");
    if (ks.empty()) usage_error("omega: empty k ladder");
    for (std::size_t i = 1; i < ks.size(); ++i)
        if (!(ks[i] > ks[i - 1])) usage_error("omega: k ladder must increase");
    OmegaReport rep;
    rep.c = c;
    for (const auto& pb : probes) {
        OmegaProbe probe{pb, ks, {}, omega_infinite};
        const Arc B = boundary::visual_ball(pb.center, pb.radius);
        const Arc half = boundary::visual_ball(pb.center, 0.5 * pb.radius);
        const double need = c * mu.of(B);
        for (double k : ks) {
            const double cap = 1.0 / (c * k);
            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < sys.balls.size(); ++i)
                if (sys.balls[i].radius <= cap && arcs::arcs_meet(sys.balls[i].arc(), half)) pool.push_back(i);
            std::stable_sort(pool.begin(), pool.end(),
                             [&](std::size_t a, std::size_t b) { return sys.balls[a].radius > sys.balls[b].radius; });
            // ck-maximal at its own center: no strictly larger admissible-radius ball contains the center.
            std::vector<std::size_t> cand;
            ArcUnion bigger;
            std::size_t g = 0;
            while (g < pool.size()) {
                std::size_t h = g;
                while (h < pool.size() && sys.balls[pool[h]].radius == sys.balls[pool[g]].radius) ++h;
                for (std::size_t q = g; q < h; ++q) {
                    const DirBall& b = sys.balls[pool[q]];
                    if (!bigger.contains(b.center) && arcs::arc_within(b.arc(), half)) cand.push_back(pool[q]);
                }
                for (std::size_t q = g; q < h; ++q) bigger.insert(sys.balls[pool[q]].arc());
                g = h;
            }
            auto covered = [&](std::size_t m) {
                std::vector<Arc> a;
                for (std::size_t q = 0; q < m; ++q) a.push_back(sys.balls[cand[q]].arc());
                return measure_of(mu, ArcSet::from_arcs(a));
            };
            if (cand.empty() || covered(cand.size()) < need) {
                probe.omegas.push_back(omega_infinite);
                continue;
            }
            std::size_t lo = 1, hi = cand.size();
            while (lo < hi) {
                const std::size_t mid = (lo + hi) / 2;
                if (covered(mid) >= need)
                    hi = mid;
                else
                    lo = mid + 1;
            }
            probe.omegas.push_back(omega_exponent(sys.balls[cand[lo - 1]].radius, c, k));
        }
        probe.proxy = proxy_of(probe.omegas);
        rep.probes.push_back(std::move(probe));
    }
    rep.omega_bar = combine_probes(rep.probes);
    return rep;
}

// Cylinder system W_n at the depths in `depths` (all words of each listed length).
// A probe is C(p) around a point whose next letter after p is q, so B/2 = C(pq).
struct TreeProbe {
    tree::Word ball;
};

// Exact omega for a cylinder system: the ck-maximal cylinders at every point are the depth-n(k)
// cylinders, n(k) the least listed depth with e^-n <= 1/(ck).
inline OmegaReport omega_tree(const tree::FreeGroup& group, const std::vector<int>& depths, double c,
                              const std::vector<tree::Word>& probes, const std::vector<double>& ks) {
    if (!(c > 0.0) || c > 1.0) usage_error("omega: c must lie in (0, 1]");
    if (ks.empty()) usage_error("omega: empty k ladder");
    std::vector<int> S = depths;
    std::sort(S.begin(), S.end());
    OmegaReport rep;
    rep.c = c;
    const boundary::TreeMeasure mu{group.rank()};
    for (const auto& p : probes) {
        if (p.empty()) usage_error("omega_tree: probe must be a proper cylinder");
        OmegaProbe probe{{0.0, std::exp(-static_cast<double>(p.size()))}, ks, {}, omega_infinite};
        tree::Word half = p;
        half.push_back(group.children(p).front().back());
        const double need = c * mu.of(p);
        for (double k : ks) {
            const double lim = std::log(c * k);
            auto it = std::find_if(S.begin(), S.end(), [&](int n) { return n >= lim - 1e-12 && n >= static_cast<int>(half.size()); });
            // Every point of B/2 has its maximal cylinder inside B/2, so the union is B/2.
            if (it == S.end() || mu.of(half) < need) {
                probe.omegas.push_back(omega_infinite);
                continue;
            }
            probe.omegas.push_back(omega_exponent(std::exp(-static_cast<double>(*it)), c, k));
        }
        probe.proxy = proxy_of(probe.omegas);
        rep.probes.push_back(std::move(probe));
    }
    rep.omega_bar = combine_probes(rep.probes);
    return rep;
}

// ---------------------------------------------------------------- dimension bounds

template <class T>
struct Bounds {
    T lower{};
    T upper{};
    bool exact = false;
    bool omega_infinite = false;
    std::string warning;
};

// (1/omega) (beta_inf + D) / alpha_sup <= dim <= (beta_sup + D) / alpha_inf.
// With beta given in units of D and D = 1 the bounds come out in units of D.
template <class T>
Bounds<T> dimension_bounds(const Aggregates<T>& a, T D, int omega_bar) {
    if (!(a.alpha_inf > T(0))) usage_error("dimension_bounds: alpha must be positive");
    Bounds<T> b;
    b.upper = (a.beta_sup + D) / a.alpha_inf;
    if (omega_bar == omega_infinite) {
        b.lower = T(0);
        b.omega_infinite = true;
        b.warning = "omega is infinite; lower bound set to 0";
    } else {
        if (omega_bar < 1) usage_error("dimension_bounds: omega must be a positive integer");
        b.lower = (a.beta_inf + D) / (a.alpha_sup * T(omega_bar));
    }
    b.exact = b.lower == b.upper;
    return b;
}

// ---------------------------------------------------------------- Borel-Cantelli

enum class Family { linear, logarithmic, constant, affine };

// linear: a t; logarithmic: a log(1+t); constant: b; affine: a t + b.
struct RateFunction {
    Family family = Family::constant;
    double a = 0.0;
    double b = 0.0;

    double operator()(double t) const {
        switch (family) {
            case Family::linear: return a * t;
            case Family::logarithmic: return a * std::log1p(t);
            case Family::constant: return b;
            case Family::affine: return a * t + b;
        }
        return 0.0;
    }
    double linear_part() const { return family == Family::linear || family == Family::affine ? a : 0.0; }
    double log_part() const { return family == Family::logarithmic ? a : 0.0; }
    double constant_part() const { return family == Family::constant || family == Family::affine ? b : 0.0; }

    static RateFunction linear(double tau) { return {Family::linear, tau, 0.0}; }
    static RateFunction logarithmic(double lambda) { return {Family::logarithmic, lambda, 0.0}; }
    static RateFunction constant(double c) { return {Family::constant, 0.0, c}; }
    static RateFunction affine(double a, double b) { return {Family::affine, a, b}; }
};

inline std::string to_string(const RateFunction& f) {
    switch (f.family) {
        case Family::linear: return "linear " + std::to_string(f.a);
        case Family::logarithmic: return "log " + std::to_string(f.a);
        case Family::constant: return "const " + std::to_string(f.b);
        case Family::affine: return "affine " + std::to_string(f.a) + " " + std::to_string(f.b);
    }
    return "";
}

// "linear 1", "log 0.5", "const 2", "affine 1 0.5".
inline RateFunction parse_rate(const std::string& text) {
    char kind[32] = {0};
    double x = 0.0, y = 0.0;
    const int n = std::sscanf(text.c_str(), "%31s %lf %lf", kind, &x, &y);
    const std::string k = kind;
    if (k == "linear" && n == 2) return RateFunction::linear(x);
    if ((k == "log" || k == "logarithmic") && n == 2) return RateFunction::logarithmic(x);
    if ((k == "const" || k == "constant") && n == 2) return RateFunction::constant(x);
    if (k == "affine" && n == 3) return RateFunction::affine(x, y);
    usage_error("unsupported rate function '" + text + "' (linear a | log a | const c | affine a b)");
}

enum class Verdict { converges, diverges };

struct IntegralTest {
    RateFunction phi;
    RateFunction n;
    double D = 1.0;
    Verdict verdict = Verdict::diverges;
    double integral_1e3 = 0.0;  // quadrature of the integrand over [1, 10^3]
    double integral_1e6 = 0.0;  // over [1, 10^6]
    double linear_rate = 0.0;   // exponent phi D - n = L t + Lambda log(1+t) + K
    double log_rate = 0.0;
};

// Simpson in u = log t of exp(-E(e^u)) e^u.
inline double tail_quadrature(const RateFunction& phi, const RateFunction& n, double D, double upper) {
    const int steps = 20000;
    const double U = std::log(upper), h = U / steps;
    double s = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double u = h * i, t = std::exp(u);
        const double e = std::min(700.0, -(phi(t) * D - n(t)) + u);
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::exp(e);
    }
    return s * h / 3.0;
}

inline IntegralTest borel_cantelli(const RateFunction& phi, const RateFunction& n, double D) {
    if (!(D > 0.0)) usage_error("borel_cantelli: D must be positive");
    IntegralTest t{phi, n, D};
    t.linear_rate = D * phi.linear_part() - n.linear_part();
    t.log_rate = D * phi.log_part() - n.log_part();
    const double tol = 1e-12;
    const bool conv = t.linear_rate > tol || (std::fabs(t.linear_rate) <= tol && t.log_rate > 1.0 + tol);
    t.verdict = conv ? Verdict::converges : Verdict::diverges;
    t.integral_1e3 = tail_quadrature(phi, n, D, 1e3);
    t.integral_1e6 = tail_quadrature(phi, n, D, 1e6);
    return t;
}

inline const char* to_string(Verdict v) { return v == Verdict::converges ? "converges" : "diverges"; }

// ---------------------------------------------------------------- stages

inline ArcSet finite_stage(const DirichletSystem& sys, const std::vector<std::vector<Arc>>& F, double T1, double T2) {
    if (!(T1 < T2)) usage_error("finite_stage: window needs T1 < T2");
    if (F.size() != sys.balls.size()) usage_error("finite_stage: F must list one colony per index");
    const double rmin = std::exp(-T2), rmax = std::exp(-T1);
    std::vector<Arc> all;
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double r = sys.balls[i].radius;
        if (r < rmin * (1.0 - 1e-12) || r > rmax * (1.0 + 1e-12)) continue;
        all.insert(all.end(), F[i].begin(), F[i].end());
    }
    return ArcSet::from_arcs(all);
}

// ---------------------------------------------------------------- Cantor certifier

inline constexpr double certify_threshold = 0.05;

struct ChainLink {
    std::size_t index = 0;
    Arc ball;
    double radius = 0.0;  // visual radius of the colony ball
    double k = 1.0;
};

struct CantorChain {
    std::vector<ChainLink> links;
    double witness = 0.0;
    double cover_content = 0.0;
};

// One surviving branch: at stage i pick a colony ball of an index with Dir radius <= 1/k_i,
// inside the inner half of the previous ball and disjoint from cover cells at least as large.
inline CantorChain cantor_certify(const DirichletSystem& sys, const std::vector<std::vector<Arc>>& F,
                                  const std::vector<Arc>& cover, double d_prime, int depth,
                                  double threshold = certify_threshold) {
    if (!(d_prime > 0.0)) usage_error("cantor_certify: needs a positive lower bound d'");
    if (F.size() != sys.balls.size()) usage_error("cantor_certify: F must list one colony per index");
    if (depth < 1) usage_error("cantor_certify: depth must be positive");
    CantorChain chain;
    for (const auto& u : cover) chain.cover_content += std::pow(u.visual_diameter(), d_prime);
    if (chain.cover_content > threshold)
        usage_error("cantor_certify: refused, cover content " + std::to_string(chain.cover_content) +
                    " exceeds threshold " + std::to_string(threshold));
    const ArcSet cover_set = ArcSet::from_arcs(cover);

    Arc V{0.0, disk::two_pi};
    double Vrad = 1.0, k = 1.0, last_depth = -1.0;
    for (int stage = 0; stage < depth; ++stage) {
        k = std::max(2.0 * k, std::ceil(8.0 / Vrad));
        const Arc inner = V.full() ? V : Arc::centered(V.center(), 0.25 * V.length);
        const double cap = 1.0 / k;
        bool found = false;
        ChainLink best;
        double best_score = -1.0, best_off = 0.0;
        long best_level = std::numeric_limits<long>::max();
        for (std::size_t i = 0; i < sys.balls.size(); ++i) {
            if (sys.balls[i].radius > cap || sys.balls[i].depth <= last_depth) continue;
            for (const Arc& b : F[i]) {
                if (!arcs::arc_within(b, inner)) continue;
                const double diam = b.visual_diameter();
                bool blocked = false;
                for (const auto& u : cover)
                    if (u.visual_diameter() >= diam && arcs::arcs_meet(u, b)) {
                        blocked = true;
                        break;
                    }
                if (blocked) continue;
                const double score = cover_set.angular_distance(b.center());
                const double off = V.full() ? 0.0 : disk::angle_gap(b.center(), V.center());
                // Shallow indices first so later stages still find deeper ones.
                const long level = static_cast<long>(std::floor(sys.balls[i].depth));
                const bool tie = std::fabs(score - best_score) <= 1e-15;
                if (level < best_level || (level == best_level && (score > best_score + 1e-15 || (tie && off < best_off)))) {
                    best_level = level;
                    best_score = score;
                    best_off = off;
                    best = {i, b, disk::angle_to_visual_radius(0.5 * b.length), k};
                    found = true;
                }
            }
        }
        if (!found) geometry_error("cantor_certify: construction stalled at stage " + std::to_string(stage));
        chain.links.push_back(best);
        V = best.ball;
        Vrad = best.radius;
        last_depth = sys.balls[best.index].depth;
    }
    chain.witness = V.center();
    for (const auto& l : chain.links)
        if (!l.ball.contains(chain.witness)) geometry_error("cantor_certify: chain is not nested");
    if (cover_set.contains(chain.witness)) geometry_error("cantor_certify: witness lies in the cover");
    return chain;
}

}  // namespace hyperlab::jb
