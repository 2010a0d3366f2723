#pragma once

// The (2k)-regular tree as the Cayley graph of the free group F_k.
//
// Vertices are reduced words over letters 0..2k-1, where letter i and
// letter (i + k) mod 2k are mutually inverse. The root is the empty word.
// Boundary points are infinite reduced words, stored eventually periodic.
// Everything here is exact integer arithmetic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlab/error.hpp"

namespace hyperlab::tree {

using Letter = std::uint8_t;
using Word = std::vector<Letter>;

class FreeGroup {
public:
    explicit FreeGroup(int rank) : rank_(rank) {
        if (rank < 1 || rank > 64) usage_error("free group rank must be in [1, 64]");
    }

    int rank() const { return rank_; }
    int alphabet() const { return 2 * rank_; }
    int branching() const { return 2 * rank_; }
    Letter inverse(Letter l) const { return static_cast<Letter>((l + rank_) % (2 * rank_)); }

    bool is_reduced(const Word& w) const {
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            if (w[i] >= alphabet() || w[i + 1] == inverse(w[i])) return false;
        }
        return w.empty() || w.back() < alphabet();
    }

    Word reduce(const Word& w) const {
        Word out;
        out.reserve(w.size());
        for (Letter l : w) {
            if (l >= alphabet()) usage_error("letter outside the free-group alphabet");
            if (!out.empty() && out.back() == inverse(l))
                out.pop_back();
            else
                out.push_back(l);
        }
        return out;
    }

    Word multiply(const Word& g, const Word& h) const {
        Word w = g;
        w.insert(w.end(), h.begin(), h.end());
        return reduce(w);
    }

    Word invert(const Word& g) const {
        Word w(g.rbegin(), g.rend());
        for (auto& l : w) l = inverse(l);
        return w;
    }

    // Number of reduced words of length exactly n.
    std::uint64_t sphere_size(int n) const {
        if (n == 0) return 1;
        std::uint64_t s = static_cast<std::uint64_t>(alphabet());
        for (int i = 1; i < n; ++i) s *= static_cast<std::uint64_t>(alphabet() - 1);
        return s;
    }

    std::uint64_t ball_size(int n) const {
        std::uint64_t s = 0;
        for (int i = 0; i <= n; ++i) s += sphere_size(i);
        return s;
    }

    // All reduced words of length exactly n, in shortlex order.
    std::vector<Word> sphere(int n) const {
        std::vector<Word> out;
        Word w;
        std::function<void(int)> rec = [&](int depth) {
            if (depth == n) {
                out.push_back(w);
                return;
            }
            for (int l = 0; l < alphabet(); ++l) {
                if (!w.empty() && static_cast<Letter>(l) == inverse(w.back())) continue;
                w.push_back(static_cast<Letter>(l));
                rec(depth + 1);
                w.pop_back();
            }
        };
        rec(0);
        return out;
    }

    // Reduced extensions of w by one letter.
    std::vector<Word> children(const Word& w) const {
        std::vector<Word> out;
        for (int l = 0; l < alphabet(); ++l) {
            if (!w.empty() && static_cast<Letter>(l) == inverse(w.back())) continue;
            Word c = w;
            c.push_back(static_cast<Letter>(l));
            out.push_back(std::move(c));
        }
        return out;
    }

private:
    int rank_;
};

inline std::size_t common_prefix(const Word& a, const Word& b) {
    const std::size_t n = std::min(a.size(), b.size());
    std::size_t i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return i;
}

inline bool is_prefix(const Word& prefix, const Word& w) {
    return prefix.size() <= w.size() && std::equal(prefix.begin(), prefix.end(), w.begin());
}

// Graph distance between two vertices.
inline std::size_t distance(const Word& u, const Word& v) {
    const std::size_t c = common_prefix(u, v);
    return (u.size() - c) + (v.size() - c);
}

inline std::string to_string(const Word& w) {
    if (w.empty()) return "e";
    std::ostringstream os;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) os << '.';
        os << static_cast<int>(w[i]);
    }
    return os.str();
}

inline Word parse_word(const std::string& s) {
    Word w;
    if (s == "e" || s.empty()) return w;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, '.')) {
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 3)
            usage_error("malformed word '" + s + "' (expected dot-separated letter indices)");
        w.push_back(static_cast<Letter>(std::stoi(tok)));
    }
    return w;
}

// Infinite reduced word prefix + period^infinity.
class Ray {
public:
    Ray(const FreeGroup& group, Word prefix, Word period)
        : prefix_(std::move(prefix)), period_(std::move(period)) {
        if (period_.empty()) usage_error("tree ray needs a nonempty period");
        Word probe = prefix_;
        probe.insert(probe.end(), period_.begin(), period_.end());
        probe.insert(probe.end(), period_.begin(), period_.end());
        if (!group.is_reduced(probe)) usage_error("tree ray is not a reduced infinite word");
    }

    Letter at(std::size_t i) const {
        if (i < prefix_.size()) return prefix_[i];
        return period_[(i - prefix_.size()) % period_.size()];
    }

    Word truncate(std::size_t n) const {
        Word w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = at(i);
        return w;
    }

    const Word& prefix() const { return prefix_; }
    const Word& period() const { return period_; }

    // Length past which two eventually periodic rays that agree must agree forever.
    std::size_t horizon(const Ray& o) const {
        return std::max(prefix_.size(), o.prefix_.size()) + 2 * period_.size() * o.period_.size() + 1;
    }

private:
    Word prefix_;
    Word period_;
};

// (xi|eta) from the root: common prefix length, or -1 for equal rays.
inline long gromov_product(const Ray& xi, const Ray& eta) {
    const std::size_t h = xi.horizon(eta);
    for (std::size_t i = 0; i < h; ++i)
        if (xi.at(i) != eta.at(i)) return static_cast<long>(i);
    return -1;
}

inline double visual_distance(const Ray& xi, const Ray& eta) {
    const long n = gromov_product(xi, eta);
    return n < 0 ? 0.0 : std::exp(-static_cast<double>(n));
}

// Left multiplication g . ray.
inline Ray apply(const FreeGroup& group, const Word& g, const Ray& xi) {
    std::size_t reps = g.size() / xi.period().size() + 2;
    Word w = xi.truncate(xi.prefix().size() + reps * xi.period().size());
    return Ray(group, group.multiply(g, w), xi.period());
}

inline Word apply(const FreeGroup& group, const Word& g, const Word& v) { return group.multiply(g, v); }

// Distance from vertex v to the vertex set of the geodesic ray from the root to xi.
inline std::size_t dist_to_ray(const Word& v, const Ray& xi) {
    std::size_t c = 0;
    while (c < v.size() && v[c] == xi.at(c)) ++c;
    return v.size() - c;
}

}  // namespace hyperlab::tree
