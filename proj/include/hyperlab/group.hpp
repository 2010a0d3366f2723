#pragma once

// Group presentations in the disk, orbit balls, critical exponents, coset tops and trails.
//
// A presentation with r generators uses letters 0..2r-1, letter l + r being the
// inverse of letter l, the same convention as tree::FreeGroup.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperlab/disk.hpp"
#include "hyperlab/error.hpp"
#include "hyperlab/stats.hpp"
#include "hyperlab/tree.hpp"

namespace hyperlab::group {

using disk::Complex;
using disk::Isometry;
using disk::ModelPoint;
using tree::Letter;
using tree::Word;

// Hyperbolicity constant of the hyperbolic plane.
inline const double plane_delta = std::log(1.0 + std::sqrt(2.0));

enum class PruneRule {
    margin,     // drop words whose displacement exceeds T + 2 delta + max generator length
    dirichlet,  // tile search through the regular octagon, exact for the genus-2 group
};

struct Presentation {
    std::string label;
    std::vector<Isometry> generators;  // 2r entries, inverse of l at (l + r) mod 2r
    std::vector<std::string> names;
    std::vector<Word> relators;
    PruneRule prune = PruneRule::margin;
    double side_length = 0.0;  // octagon side-pairing translation length, dirichlet rule only

    int rank() const { return static_cast<int>(generators.size() / 2); }
    Letter inverse(Letter l) const { return static_cast<Letter>((l + rank()) % (2 * rank())); }

    Isometry evaluate(const Word& w) const {
        Isometry g = Isometry::identity();
        for (Letter l : w) g = g * generators.at(l);
        return g;
    }

    double max_generator_length() const {
        double m = 0.0;
        for (const auto& g : generators) m = std::max(m, g.displacement());
        return m;
    }

    double min_generator_length() const {
        double m = 1e300;
        for (const auto& g : generators) m = std::min(m, g.displacement());
        return m;
    }

    // Largest relator defect max|entry - identity entry| (up to sign).
    double relator_defect() const {
        double worst = 0.0;
        for (const auto& r : relators) worst = std::max(worst, evaluate(r).entry_distance(Isometry::identity()));
        return worst;
    }

    void validate() const {
        if (generators.empty() || generators.size() % 2) usage_error("presentation needs generators with inverses");
        for (int l = 0; l < 2 * rank(); ++l) {
            const Isometry p = generators[l] * generators[inverse(static_cast<Letter>(l))];
            if (p.entry_distance(Isometry::identity()) > 1e-9)
                usage_error("presentation generator " + names.at(l) + " does not match its inverse slot");
        }
        if (relator_defect() > 1e-6) geometry_error("presentation relator does not evaluate to the identity");
    }
};

// Translation length of the genus-2 octagon side pairings: cosh(l/2) = cot(pi/8).
inline double genus2_side_length() { return 2.0 * std::acosh(1.0 / std::tan(disk::pi / 8.0)); }

// Side pairings of the regular octagon with vertex angles pi/4.
// Letter k (k = 0..7) translates towards k pi / 4; letter k + 4 is its inverse.
inline Presentation genus2() {
    Presentation p;
    p.label = "genus2";
    p.side_length = genus2_side_length();
    for (int k = 0; k < 8; ++k) {
        p.generators.push_back(Isometry::translation(p.side_length, k * disk::pi / 4.0));
        p.names.push_back("a" + std::to_string(k));
    }
    // Boundary word of the octagon: a0 a3 a2^-1 a1 a0^-1 a3^-1 a2 a1^-1.
    p.relators.push_back(Word{0, 3, 6, 1, 4, 7, 2, 5});
    p.prune = PruneRule::dirichlet;
    return p;
}

// Isometric circles of translation(d, theta) meet the boundary in an arc of half-width acos(tanh(d/2)).
inline double pairing_half_width(double d) { return std::acos(std::tanh(0.5 * d)); }

// Rank-r Schottky group: translations of length d towards j pi / r, j = 0..r-1.
inline Presentation schottky(int r, double d) {
    if (r < 1 || r > 16) usage_error("schottky rank must be in [1, 16]");
    if (!(d > 0.0) || d > limits::max_displacement) usage_error("schottky displacement out of range");
    if (!(pairing_half_width(d) < disk::pi / (2.0 * r)))
        usage_error("schottky(" + std::to_string(r) + ", d): pairing circles overlap, need tanh(d/2) > cos(pi/(2r))");
    Presentation p;
    std::ostringstream os;
    os << "schottky(" << r << ", " << d << ")";
    p.label = os.str();
    for (int j = 0; j < 2 * r; ++j) {
        p.generators.push_back(Isometry::translation(d, j * disk::pi / r));
        p.names.push_back((j < r ? "s" : "S") + std::to_string(j % r));
    }
    return p;
}

// Infinite cyclic group generated by a translation of length l along the real axis.
inline Presentation cyclic(double l) {
    Presentation p;
    p.label = "cyclic";
    p.generators = {Isometry::translation(l, 0.0), Isometry::translation(l, disk::pi)};
    p.names = {"h", "H"};
    return p;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Built-in labels: genus2, schottky(r, d), cyclic(l). free(k) names the tree backend.
inline Presentation builtin(const std::string& label_in) {
    std::string label;
    for (char c : label_in)
        if (c != ' ') label += c;
    if (label == "genus2") return genus2();
    double x = 0.0, y = 0.0;
    char tail = 0;
    int r = 0;
    if (std::sscanf(label.c_str(), "schottky(%d,%lf%c", &r, &x, &tail) == 3 && tail == ')') return schottky(r, x);
    if (std::sscanf(label.c_str(), "cyclic(%lf%c", &y, &tail) == 2 && tail == ')') return cyclic(y);
    usage_error("unknown built-in presentation '" + label_in + "'");
}

// Presentation text:
//   label <name>
//   preset <builtin label>
//   generator <name> <re a> <im a> <re b> <im b>
//   relator <name> <name>^-1 ...
// Inverse generators are appended automatically as <name>^-1.
inline Presentation parse_presentation(std::istream& in) {
    Presentation p;
    std::vector<std::string> base_names;
    std::vector<Isometry> base;
    std::vector<std::vector<std::string>> relator_tokens;
    std::string line;
    int lineno = 0;
    bool preset = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        auto fail = [&](const std::string& what) {
            usage_error("presentation line " + std::to_string(lineno) + ": " + what);
        };
        if (key == "label") {
            std::string rest;
            std::getline(ls, rest);
            p.label = trim(rest);
        } else if (key == "preset") {
            std::string rest;
            std::getline(ls, rest);
            const std::string keep = p.label;
            p = builtin(trim(rest));
            if (!keep.empty()) p.label = keep;
            preset = true;
        } else if (key == "generator") {
            std::string name;
            double ar, ai, br, bi;
            if (!(ls >> name >> ar >> ai >> br >> bi)) fail("expected 'generator <name> <re a> <im a> <re b> <im b>'");
            try {
                base.emplace_back(Complex(ar, ai), Complex(br, bi));
            } catch (const Error& e) {
                fail(e.what());
            }
            base_names.push_back(name);
        } else if (key == "relator") {
            std::vector<std::string> toks;
            std::string t;
            while (ls >> t) toks.push_back(t);
            if (toks.empty()) fail("empty relator");
            relator_tokens.push_back(toks);
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (preset && !base.empty()) usage_error("presentation mixes a preset with explicit generators");
    if (!preset) {
        if (base.empty()) usage_error("presentation lists no generators");
        for (const auto& g : base) p.generators.push_back(g);
        for (const auto& g : base) p.generators.push_back(g.inverse());
        p.names = base_names;
        for (const auto& n : base_names) p.names.push_back(n + "^-1");
        if (p.label.empty()) p.label = "custom";
    }
    for (const auto& toks : relator_tokens) {
        Word w;
        for (const auto& t : toks) {
            auto it = std::find(p.names.begin(), p.names.end(), t);
            if (it == p.names.end()) usage_error("relator uses unknown generator '" + t + "'");
            w.push_back(static_cast<Letter>(it - p.names.begin()));
        }
        p.relators.push_back(w);
    }
    p.validate();
    return p;
}

inline Presentation load_presentation(const std::string& path) {
    std::ifstream f(path);
    if (!f) usage_error("cannot open presentation file " + path);
    return parse_presentation(f);
}

struct OrbitElement {
    Word word;
    Isometry g;
    double rho = 0.0;
};

struct OrbitBall {
    double cutoff = 0.0;
    double bucket = 1.0;
    std::vector<OrbitElement> elements;  // sorted by rho, identity first
    std::vector<std::uint64_t> annuli;   // counts per [n bucket, (n+1) bucket)
    std::size_t visited = 0;             // tiles or words touched by the search
};

// Open-addressing map from quantized isometry entries to indices.
// A hit requires entry distance below tol; cells near a rounding boundary also probe their neighbor.
class IsometryIndex {
public:
    explicit IsometryIndex(double tol = 1e-7) : tol_(tol) { slots_.assign(1 << 12, Slot{}); }

    template <class Get>
    long find(const Isometry& g, Get&& get) const {
        const std::array<double, 4> c = coords(g);
        std::array<std::int64_t, 4> cell{};
        std::array<int, 4> side{};
        int near_mask = 0;
        for (int i = 0; i < 4; ++i) {
            const double q = c[i] / tol_;
            cell[i] = static_cast<std::int64_t>(std::floor(q));
            const double frac = q - std::floor(q);
            if (frac < 0.01 || frac > 0.99) near_mask |= 1 << i;
            side[i] = frac < 0.5 ? -1 : 1;
        }
        for (int sub = near_mask;; sub = (sub - 1) & near_mask) {
            std::array<std::int64_t, 4> probe = cell;
            for (int i = 0; i < 4; ++i)
                if (sub >> i & 1) probe[i] += side[i];
            const std::uint64_t h = hash(probe);
            for (std::size_t s = h & mask(); slots_[s].used; s = (s + 1) & mask()) {
                if (slots_[s].key == h && get(slots_[s].index).entry_distance(g) < tol_)
                    return static_cast<long>(slots_[s].index);
            }
            if (sub == 0) break;
        }
        return -1;
    }

    void insert(const Isometry& g, std::uint32_t idx) {
        if (2 * (size_ + 1) > slots_.size()) grow();
        const std::array<double, 4> c = coords(g);
        std::array<std::int64_t, 4> cell{};
        for (int i = 0; i < 4; ++i) cell[i] = static_cast<std::int64_t>(std::floor(c[i] / tol_));
        place(Slot{hash(cell), idx, true});
        ++size_;
    }

private:
    struct Slot {
        std::uint64_t key = 0;
        std::uint32_t index = 0;
        bool used = false;
    };

    std::size_t mask() const { return slots_.size() - 1; }

    void place(const Slot& e) {
        std::size_t s = e.key & mask();
        while (slots_[s].used) s = (s + 1) & mask();
        slots_[s] = e;
    }

    void grow() {
        std::vector<Slot> old(slots_.size() * 2);
        old.swap(slots_);
        for (const auto& e : old)
            if (e.used) place(e);
    }

    static std::array<double, 4> coords(const Isometry& g) {
        return {g.a().real(), g.a().imag(), g.b().real(), g.b().imag()};
    }
    static std::uint64_t hash(const std::array<std::int64_t, 4>& k) {
        std::uint64_t h = 0x243f6a8885a308d3ull;
        for (auto v : k) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 0x9e3779b97f4a7c15ull;
            h ^= h >> 29;
        }
        return h;
    }

    double tol_;
    std::size_t size_ = 0;
    std::vector<Slot> slots_;
};

struct OrbitOptions {
    double bucket = 1.0;
    std::size_t max_visited = 12'000'000;
};

// Distance from 0 to the bisector of g0 and h0, where d(g0, h0) = side_length; 0 if 0 is on g's side.
inline double bisector_lower_bound(double cosh_g, double cosh_h, double side_length) {
    if (cosh_g <= cosh_h) return 0.0;
    return std::asinh((cosh_g - cosh_h) / (2.0 * std::sinh(0.5 * side_length)));
}

inline void finish_ball(OrbitBall& ball) {
    std::stable_sort(ball.elements.begin(), ball.elements.end(), [](const OrbitElement& x, const OrbitElement& y) {
        if (x.rho != y.rho) return x.rho < y.rho;
        if (x.word.size() != y.word.size()) return x.word.size() < y.word.size();
        return x.word < y.word;
    });
    const std::size_t nb = static_cast<std::size_t>(std::floor(ball.cutoff / ball.bucket)) + 1;
    ball.annuli.assign(nb, 0);
    for (const auto& e : ball.elements) {
        const auto k = static_cast<std::size_t>(std::floor(e.rho / ball.bucket));
        if (k < nb) ++ball.annuli[k];
    }
}

// All orbit elements g with rho(0, g0) <= T, by breadth-first search over words.
inline OrbitBall orbit_ball(const Presentation& pres, double T, const OrbitOptions& opt = {}) {
    if (T > limits::max_displacement) {
        std::ostringstream os;
        os << "orbit_ball: cutoff T = " << T << " exceeds the float guard " << limits::max_displacement;
        resource_error(os.str());
    }
    if (!(T >= 0.0)) usage_error("orbit_ball: cutoff must be nonnegative");
    OrbitBall ball;
    ball.cutoff = T;
    ball.bucket = opt.bucket;

    const int alphabet = 2 * pres.rank();
    const double margin = 2.0 * plane_delta + pres.max_generator_length();

    struct Node {
        Isometry g;
        std::uint32_t parent;
        Letter letter;
    };
    constexpr Letter none = 255;
    std::vector<Node> store;
    IsometryIndex index;
    auto get = [&](std::uint32_t i) -> const Isometry& { return store[i].g; };
    store.push_back({Isometry::identity(), 0, none});
    index.insert(store[0].g, 0);

    auto keep = [&](const Isometry& g) {
        if (pres.prune == PruneRule::margin) return g.displacement() <= T + margin;
        const double c = g.cosh_displacement();
        double lb = 0.0;
        for (int k = 0; k < alphabet; ++k) {
            const double ch = (g * pres.generators[k]).cosh_displacement();
            lb = std::max(lb, bisector_lower_bound(c, ch, pres.side_length));
        }
        return lb <= T;
    };

    std::size_t head = 0;
    while (head < store.size()) {
        const std::size_t cur = head++;
        const Letter prev = store[cur].letter;
        for (int k = 0; k < alphabet; ++k) {
            const Letter l = static_cast<Letter>(k);
            if (prev != none && l == pres.inverse(prev)) continue;
            const Isometry h = store[cur].g * pres.generators[k];
            if (index.find(h, get) >= 0) continue;
            if (!keep(h)) continue;
            store.push_back({h, static_cast<std::uint32_t>(cur), l});
            index.insert(h, static_cast<std::uint32_t>(store.size() - 1));
            if (store.size() > opt.max_visited) {
                std::ostringstream os;
                os << "orbit_ball: search exceeded " << opt.max_visited << " elements at T = " << T;
                resource_error(os.str());
            }
        }
    }
    ball.visited = store.size();
    for (std::size_t i = 0; i < store.size(); ++i) {
        const double rho = store[i].g.displacement();
        if (rho > T) continue;
        Word w;
        for (std::size_t j = i; store[j].letter != none; j = store[j].parent) w.push_back(store[j].letter);
        std::reverse(w.begin(), w.end());
        ball.elements.push_back({std::move(w), store[i].g, rho});
    }
    finish_ball(ball);
    return ball;
}

// Tree backend: the ball of radius n in the Cayley graph of F_k, found by the same
// breadth-first search with a dedup set over words.
struct TreeBall {
    int radius = 0;
    std::vector<Word> words;  // shortlex order
    std::vector<std::uint64_t> annuli;
};

inline TreeBall tree_orbit_ball(const tree::FreeGroup& group, int n) {
    if (n < 0 || n > 40 || group.ball_size(n) > 20'000'000ull)
        resource_error("tree_orbit_ball: ball too large");
    TreeBall ball;
    ball.radius = n;
    std::unordered_map<std::string, std::size_t> seen;
    auto key = [](const Word& w) { return std::string(w.begin(), w.end()); };
    ball.words.push_back({});
    seen.emplace(key({}), 0);
    std::size_t head = 0;
    while (head < ball.words.size()) {
        const Word cur = ball.words[head++];
        if (static_cast<int>(cur.size()) == n) continue;
        for (int l = 0; l < group.alphabet(); ++l) {
            Word next = group.multiply(cur, Word{static_cast<Letter>(l)});
            if (seen.count(key(next))) continue;
            seen.emplace(key(next), ball.words.size());
            ball.words.push_back(std::move(next));
        }
    }
    ball.annuli.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& w : ball.words) ++ball.annuli[w.size()];
    return ball;
}

struct ExponentEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
    double r2 = 1.0;
    std::size_t first_annulus = 0;
    std::size_t last_annulus = 0;
    std::vector<std::uint64_t> annuli;
};

// Slope of log annulus counts against radius over annuli [first, last].
inline ExponentEstimate exponent_from_annuli(const std::vector<std::uint64_t>& annuli, double bucket,
                                             std::size_t first, std::size_t last) {
    std::size_t nonempty = 0;
    for (auto c : annuli) nonempty += c > 0;
    if (nonempty < 5) geometry_error("critical_exponent: fewer than five nonempty annuli");
    std::vector<double> x, y;
    for (std::size_t k = first; k <= last && k < annuli.size(); ++k) {
        if (annuli[k] == 0) continue;
        x.push_back(bucket * static_cast<double>(k));
        y.push_back(std::log(static_cast<double>(annuli[k])));
    }
    if (x.size() < 2) geometry_error("critical_exponent: degenerate fit window");
    const auto f = stats::least_squares(x, y);
    return {f.slope, f.stderr_slope, f.r2, first, last, annuli};
}

// Fits the upper two thirds of the complete annuli, where lattice effects have faded.
inline ExponentEstimate critical_exponent(const OrbitBall& ball) {
    const std::size_t complete = static_cast<std::size_t>(std::floor(ball.cutoff / ball.bucket));
    if (complete < 5) geometry_error("critical_exponent: ball has fewer than five complete annuli");
    return exponent_from_annuli(ball.annuli, ball.bucket, complete / 3, complete - 1);
}

inline ExponentEstimate critical_exponent(const TreeBall& ball) {
    if (ball.radius < 5) geometry_error("critical_exponent: tree ball has fewer than five annuli");
    return exponent_from_annuli(ball.annuli, 1.0, 1, static_cast<std::size_t>(ball.radius));
}

enum class SubgroupKind { cyclic, point, free_factor };

struct SubgroupSpec {
    SubgroupKind kind = SubgroupKind::point;
    Word generator;                // cyclic: word of the hyperbolic generator h
    double critical_exponent = 0.0;

    static SubgroupSpec point_target() { return {}; }
    static SubgroupSpec cyclic_word(Word w) { return {SubgroupKind::cyclic, std::move(w), 0.0}; }
};

struct CosetTop {
    Isometry rep;
    Word word;
    ModelPoint top;
    double depth = 0.0;
    disk::GeodesicLine axis;  // rep applied to the axis of h (point target: unused)
};

// Distance from 0 to a point moving along the axis: cosh rho = cosh(depth) cosh(offset).
inline double axis_offset(double depth, double rho) {
    const double r = std::cosh(rho) / std::cosh(depth);
    return r <= 1.0 ? 0.0 : std::acosh(r);
}

// Top distance and signed foot position along line of a point w in the disk.
struct AxisFrame {
    Isometry to_standard;  // maps the axis to the real diameter, attracting end to +1
    double translation = 0.0;
};

inline AxisFrame axis_frame(const Isometry& h) {
    if (!h.is_hyperbolic(1e-6)) usage_error("coset_tops: subgroup generator is not hyperbolic");
    const auto [plus, minus] = h.fixed_points();
    // Move the projection of 0 to the origin and rotate the attracting end to angle 0.
    const disk::GeodesicLine line{minus, plus};
    const auto proj = disk::dist_to_geodesic(ModelPoint(), line);
    const Isometry m = Isometry::moving_origin_to(proj.foot).inverse();
    const double ang = m.apply(plus).angle();
    return {Isometry::rotation(-ang) * m, h.translation_length()};
}

// Coset tops g<h> (or orbit points for the point target) with depth <= T.
// The input ball must reach T + log cosh(l/2) so every coset meets it.
inline std::vector<CosetTop> coset_tops(const Presentation& pres, const OrbitBall& ball, const SubgroupSpec& sub,
                                        double T) {
    if (T > limits::max_displacement) resource_error("coset_tops: T exceeds the float guard");
    std::vector<CosetTop> tops;
    if (sub.kind == SubgroupKind::point) {
        for (const auto& e : ball.elements) {
            if (e.rho > T) break;
            tops.push_back({e.g, e.word, ModelPoint(e.g.apply(Complex(0.0, 0.0))), e.rho, {}});
        }
        return tops;
    }
    if (sub.kind != SubgroupKind::cyclic) usage_error("coset_tops: only point and cyclic subgroups are modeled");
    const Isometry h = pres.evaluate(sub.generator);
    const AxisFrame frame = axis_frame(h);
    const Isometry hinv = h.inverse();
    const Isometry back = frame.to_standard.inverse();
    const Word hword = sub.generator;
    Word hinv_word;
    for (auto it = hword.rbegin(); it != hword.rend(); ++it) hinv_word.push_back(pres.inverse(*it));

    std::vector<OrbitElement> reps;
    IsometryIndex index;
    auto get = [&](std::uint32_t i) -> const Isometry& { return reps[i].g; };
    const double l = frame.translation;
    for (const auto& e : ball.elements) {
        // w = g^-1 0 in the standard frame: the axis is the real diameter.
        const Complex w = frame.to_standard.apply(e.g.inverse().apply(Complex(0.0, 0.0)));
        const double nw = std::norm(w);
        const double depth = std::asinh(2.0 * std::fabs(w.imag()) / (1.0 - nw));
        if (depth > T) continue;
        const double foot = std::atanh(std::clamp(2.0 * w.real() / (1.0 + nw), -1.0 + 1e-16, 1.0 - 1e-16));
        const long m0 = std::lround(foot / l);
        // g h^m moves the foot by m l; pick the power putting it closest to the top.
        Isometry best;
        Word best_word;
        double best_rho = 1e300;
        for (long m = m0 - 1; m <= m0 + 1; ++m) {
            Isometry r = e.g;
            Word rw = e.word;
            const Isometry& step = m >= 0 ? h : hinv;
            const Word& sw = m >= 0 ? hword : hinv_word;
            for (long i = 0; i < std::labs(m); ++i) {
                r = r * step;
                rw.insert(rw.end(), sw.begin(), sw.end());
            }
            const double rho = r.displacement();
            if (rho < best_rho - 1e-12) {
                best_rho = rho;
                best = r;
                best_word = tree::FreeGroup(pres.rank()).reduce(rw);
            }
        }
        if (index.find(best, get) >= 0) continue;
        index.insert(best, static_cast<std::uint32_t>(reps.size()));
        reps.push_back({best_word, best, best_rho});
        const disk::GeodesicLine ax{best.apply(back.apply(disk::BoundaryPoint(disk::pi))),
                                    best.apply(back.apply(disk::BoundaryPoint(0.0)))};
        const auto proj = disk::dist_to_geodesic(ModelPoint(), ax);
        tops.push_back({best, best_word, proj.foot, proj.distance, ax});
    }
    std::sort(tops.begin(), tops.end(), [](const CosetTop& a, const CosetTop& b) { return a.depth < b.depth; });
    return tops;
}

// Minimum pairwise distance among points, capped at cap; O(n k) angular sweep.
inline double min_pairwise_distance(const std::vector<ModelPoint>& pts, double cap = 1.0) {
    const std::size_t n = pts.size();
    if (n < 2) return cap;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> ang(n), rad(n);
    for (std::size_t i = 0; i < n; ++i) {
        ang[i] = pts[i].direction();
        rad[i] = pts[i].radius();
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ang[a] < ang[b]; });
    double best = cap;
    for (std::size_t ii = 0; ii < n; ++ii) {
        const std::size_t i = order[ii];
        const double hw = rad[i] > best ? std::asin(std::min(1.0, std::sinh(best) / std::sinh(rad[i]))) : disk::pi;
        for (std::size_t step = 1; step < n; ++step) {
            const std::size_t j = order[(ii + step) % n];
            const double gap = disk::canonical_angle(ang[j] - ang[i]);
            if (gap > hw) break;
            best = std::min(best, disk::distance(pts[i], pts[j]));
        }
    }
    return best;
}

inline double min_top_separation(const std::vector<CosetTop>& tops, double cap = 1.0) {
    std::vector<ModelPoint> pts;
    pts.reserve(tops.size());
    for (const auto& t : tops) pts.push_back(t.top);
    return min_pairwise_distance(pts, cap);
}

inline constexpr double top_separation = 1e-3;

inline void check_top_separation(const std::vector<CosetTop>& tops) {
    const double s = min_top_separation(tops, 1.0);
    if (s < top_separation) {
        std::ostringstream os;
        os << "coset_tops: tops accumulate at separation " << s << ", configuration looks non-discrete";
        geometry_error(os.str());
    }
}

// Annulus histogram of top depths with width R.
inline std::vector<std::uint64_t> top_annuli(const std::vector<CosetTop>& tops, double R, double T) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::floor(T / R)) + 1, 0);
    for (const auto& t : tops) {
        const auto k = static_cast<std::size_t>(std::floor(t.depth / R));
        if (k < counts.size()) ++counts[k];
    }
    return counts;
}

// Distance from p to the segment [0, point at (rho, theta)].
inline double dist_to_segment(const ModelPoint& p, double rho, double theta) {
    const double r = p.radius();
    if (r == 0.0) return 0.0;
    const double psi = disk::angle_gap(p.direction(), theta);
    const double s = std::atanh(std::tanh(r) * std::cos(psi));
    if (s <= 0.0) return r;
    if (s >= rho) return disk::distance(p, ModelPoint::from_polar(rho, theta));
    return std::asinh(std::sinh(r) * std::sin(psi));
}

// Orbit points whose geodesic from 0 meets B(center, radius), per annulus of the ball.
inline std::vector<std::uint64_t> trail_count(const OrbitBall& ball, const ModelPoint& center, double radius) {
    std::vector<std::uint64_t> counts(ball.annuli.size(), 0);
    for (const auto& e : ball.elements) {
        const auto k = static_cast<std::size_t>(std::floor(e.rho / ball.bucket));
        if (k >= counts.size()) continue;
        if (dist_to_segment(center, e.rho, e.g.orbit_direction()) <= radius) ++counts[k];
    }
    return counts;
}

// Tree trails: the path from the root to g passes within radius of center.
inline std::vector<std::uint64_t> trail_count(const TreeBall& ball, const Word& center, int radius) {
    std::vector<std::uint64_t> counts(ball.annuli.size(), 0);
    for (const auto& w : ball.words) {
        const std::size_t c = tree::common_prefix(center, w);
        if (static_cast<long>(center.size() - c) <= radius) ++counts[w.size()];
    }
    return counts;
}

}  // namespace hyperlab::group
