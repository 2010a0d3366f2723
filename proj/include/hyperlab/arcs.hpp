#pragma once

// Arc arithmetic on the circle of boundary angles.
//
// An ArcSet is a canonical list of sorted, disjoint, non-touching half-open
// intervals [lo, hi) inside [0, 2pi). Arcs that wrap through angle 0 are
// stored as two pieces. All set operations are sort-and-sweep.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <span>
#include <vector>

#include "hyperlab/disk.hpp"

namespace hyperlab::arcs {

using disk::canonical_angle;
using disk::pi;
using disk::two_pi;

// An arc [start, start + length) measured counterclockwise.
struct Arc {
    double start = 0.0;
    double length = 0.0;

    static Arc centered(double center, double half_width) {
        if (half_width >= pi) return {0.0, two_pi};
        return {canonical_angle(center - half_width), 2.0 * half_width};
    }

    double end() const { return start + length; }
    double center() const { return canonical_angle(start + 0.5 * length); }
    bool full() const { return length >= two_pi; }

    bool contains(double theta) const {
        if (full()) return true;
        return canonical_angle(theta - start) < length;
    }

    // Visual-metric diameter seen from the origin.
    double visual_diameter() const { return length >= pi ? 1.0 : std::sin(0.5 * length); }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

class ArcSet {
public:
    ArcSet() = default;

    static ArcSet full() {
        ArcSet s;
        s.pieces_.push_back({0.0, two_pi});
        return s;
    }

    static ArcSet from_arcs(std::span<const Arc> arcs) {
        std::vector<Interval> raw;
        raw.reserve(arcs.size() * 2);
        for (const Arc& a : arcs) append_arc(raw, a);
        return from_raw(std::move(raw));
    }

    static ArcSet from_arc(const Arc& a) { return from_arcs(std::span<const Arc>(&a, 1)); }

    static ArcSet from_intervals(std::vector<Interval> raw) {
        for (auto& iv : raw) {
            iv.lo = std::clamp(iv.lo, 0.0, two_pi);
            iv.hi = std::clamp(iv.hi, 0.0, two_pi);
        }
        return from_raw(std::move(raw));
    }

    const std::vector<Interval>& pieces() const { return pieces_; }
    bool empty() const { return pieces_.empty(); }
    std::size_t size() const { return pieces_.size(); }

    double total_length() const {
        double s = 0.0;
        for (const auto& p : pieces_) s += p.length();
        return s;
    }

    // Normalized Lebesgue measure.
    double measure() const { return total_length() / two_pi; }

    bool contains(double theta) const {
        theta = canonical_angle(theta);
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), theta,
                                   [](double t, const Interval& iv) { return t < iv.lo; });
        if (it == pieces_.begin()) return false;
        --it;
        return theta < it->hi;
    }

    bool intersects(const Arc& a) const { return !intersection(*this, from_arc(a)).empty(); }

    friend ArcSet unite(const ArcSet& x, const ArcSet& y) {
        std::vector<Interval> raw = x.pieces_;
        raw.insert(raw.end(), y.pieces_.begin(), y.pieces_.end());
        return from_raw(std::move(raw));
    }

    friend ArcSet intersection(const ArcSet& x, const ArcSet& y) {
        ArcSet out;
        std::size_t i = 0, j = 0;
        while (i < x.pieces_.size() && j < y.pieces_.size()) {
            const double lo = std::max(x.pieces_[i].lo, y.pieces_[j].lo);
            const double hi = std::min(x.pieces_[i].hi, y.pieces_[j].hi);
            if (lo < hi) out.pieces_.push_back({lo, hi});
            if (x.pieces_[i].hi < y.pieces_[j].hi)
                ++i;
            else
                ++j;
        }
        return out;
    }

    ArcSet complement() const {
        ArcSet out;
        double cursor = 0.0;
        for (const auto& p : pieces_) {
            if (p.lo > cursor) out.pieces_.push_back({cursor, p.lo});
            cursor = p.hi;
        }
        if (cursor < two_pi) out.pieces_.push_back({cursor, two_pi});
        return out;
    }

    // Connected components as arcs, gluing the pieces that touch at angle 0.
    std::vector<Arc> components() const {
        std::vector<Arc> out;
        if (pieces_.empty()) return out;
        if (pieces_.size() == 1 && pieces_[0].lo <= 0.0 && pieces_[0].hi >= two_pi)
            return {Arc{0.0, two_pi}};
        std::size_t first = 0, last = pieces_.size();
        const bool wraps = pieces_.front().lo <= 0.0 && pieces_.back().hi >= two_pi && pieces_.size() > 1;
        if (wraps) {
            ++first;
            --last;
        }
        for (std::size_t i = first; i < last; ++i) out.push_back({pieces_[i].lo, pieces_[i].length()});
        if (wraps)
            out.push_back({pieces_.back().lo, pieces_.back().length() + pieces_.front().length()});
        return out;
    }

    // Angular distance from theta to the set (0 inside).
    double angular_distance(double theta) const {
        if (pieces_.empty()) return pi;
        if (contains(theta)) return 0.0;
        double best = pi;
        for (const auto& p : pieces_) {
            best = std::min(best, disk::angle_gap(theta, p.lo));
            best = std::min(best, disk::angle_gap(theta, p.hi));
        }
        return best;
    }

private:
    static void append_arc(std::vector<Interval>& raw, const Arc& a) {
        if (a.length <= 0.0) return;
        if (a.full()) {
            raw.push_back({0.0, two_pi});
            return;
        }
        const double s = canonical_angle(a.start);
        const double e = s + a.length;
        if (e <= two_pi) {
            raw.push_back({s, e});
        } else {
            raw.push_back({s, two_pi});
            raw.push_back({0.0, e - two_pi});
        }
    }

    static ArcSet from_raw(std::vector<Interval> raw) {
        std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        ArcSet out;
        for (const auto& iv : raw) {
            if (!(iv.hi > iv.lo)) continue;
            if (!out.pieces_.empty() && iv.lo <= out.pieces_.back().hi)
                out.pieces_.back().hi = std::max(out.pieces_.back().hi, iv.hi);
            else
                out.pieces_.push_back(iv);
        }
        return out;
    }

    std::vector<Interval> pieces_;
};

// Angular distance between two arcs (0 when they meet).
inline double arc_gap(const Arc& a, const Arc& b) {
    if (a.full() || b.full()) return 0.0;
    if (a.contains(b.start) || b.contains(a.start)) return 0.0;
    const double d1 = canonical_angle(b.start - a.end());
    const double d2 = canonical_angle(a.start - b.end());
    return std::min(d1, d2);
}

inline bool arcs_meet(const Arc& a, const Arc& b) {
    if (a.full() || b.full()) return true;
    return a.contains(b.start) || b.contains(a.start);
}

// a is contained in b, with an absolute angular slack.
inline bool arc_within(const Arc& a, const Arc& b, double slack = 1e-12) {
    if (b.full()) return true;
    if (a.full()) return false;
    const double off = canonical_angle(a.start - b.start + slack);
    return off <= b.length + slack && off + a.length <= b.length + 2.0 * slack;
}

// Incremental union of arcs: O(log n) insertion and overlap queries.
class ArcUnion {
public:
    bool contains(double theta) const {
        theta = canonical_angle(theta);
        auto it = m_.upper_bound(theta);
        if (it == m_.begin()) return false;
        --it;
        return theta < it->second;
    }

    // Overlap of positive length with the arc.
    bool meets(const Arc& a) const {
        bool hit = false;
        pieces(a, [&](double lo, double hi) { hit = hit || meets_piece(lo, hi); });
        return hit;
    }

    void insert(const Arc& a) {
        pieces(a, [&](double lo, double hi) { insert_piece(lo, hi); });
    }

    double total_length() const { return length_; }
    double measure() const { return length_ / two_pi; }

    ArcSet to_set() const {
        std::vector<Interval> raw;
        for (const auto& [lo, hi] : m_) raw.push_back({lo, hi});
        return ArcSet::from_intervals(std::move(raw));
    }

private:
    template <class Fn>
    static void pieces(const Arc& a, Fn&& fn) {
        if (a.length <= 0.0) return;
        if (a.full()) {
            fn(0.0, two_pi);
            return;
        }
        const double s = canonical_angle(a.start), e = s + a.length;
        if (e <= two_pi) {
            fn(s, e);
        } else {
            fn(s, two_pi);
            fn(0.0, e - two_pi);
        }
    }

    bool meets_piece(double lo, double hi) const {
        auto it = m_.lower_bound(lo);
        if (it != m_.end() && it->first < hi) return true;
        if (it == m_.begin()) return false;
        --it;
        return it->second > lo;
    }

    void insert_piece(double lo, double hi) {
        auto it = m_.lower_bound(lo);
        if (it != m_.begin()) {
            auto prev = std::prev(it);
            if (prev->second >= lo) it = prev;
        }
        while (it != m_.end() && it->first <= hi) {
            lo = std::min(lo, it->first);
            hi = std::max(hi, it->second);
            length_ -= it->second - it->first;
            it = m_.erase(it);
        }
        m_.emplace(lo, hi);
        length_ += hi - lo;
    }

    std::map<double, double> m_;
    double length_ = 0.0;
};

}  // namespace hyperlab::arcs
