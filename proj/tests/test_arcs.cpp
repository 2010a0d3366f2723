#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "hyperlab/arcs.hpp"

using namespace hyperlab;
using namespace hyperlab::arcs;

namespace {

std::vector<Arc> random_arcs(std::mt19937_64& rng, int n, double maxlen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Arc> v;
    for (int i = 0; i < n; ++i) v.push_back(Arc{two_pi * u(rng), maxlen * u(rng)});
    return v;
}

bool in_any(const std::vector<Arc>& arcs, double th) {
    for (const auto& a : arcs)
        if (a.contains(th)) return true;
    return false;
}

constexpr int grid = 200000;

double sampled_measure(const std::function<bool(double)>& in) {
    int hits = 0;
    for (int i = 0; i < grid; ++i) hits += in(two_pi * (i + 0.5) / grid);
    return static_cast<double>(hits) / grid;
}

}  // namespace

TEST(Arcs, WrappingArc) {
    const Arc a{6.0, 1.0};
    EXPECT_TRUE(a.contains(0.2));
    EXPECT_TRUE(a.contains(6.1));
    EXPECT_FALSE(a.contains(1.0));
    const auto s = ArcSet::from_arc(a);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_NEAR(s.total_length(), 1.0, 1e-12);
    EXPECT_EQ(s.components().size(), 1u);
}

TEST(Arcs, UnionMeasureMatchesSampling) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const auto arcs = random_arcs(rng, 12, 0.8);
        const auto s = ArcSet::from_arcs(arcs);
        EXPECT_NEAR(s.measure(), sampled_measure([&](double t) { return in_any(arcs, t); }), 2e-4);
        for (int i = 0; i < 200; ++i) {
            const double t = two_pi * (i + 0.37) / 200;
            EXPECT_EQ(s.contains(t), in_any(arcs, t));
        }
    }
}

TEST(Arcs, InclusionExclusionAndComplement) {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        const auto x = ArcSet::from_arcs(random_arcs(rng, 6, 1.5));
        const auto y = ArcSet::from_arcs(random_arcs(rng, 6, 1.5));
        EXPECT_NEAR(unite(x, y).measure() + intersection(x, y).measure(), x.measure() + y.measure(), 1e-12);
        EXPECT_NEAR(x.complement().measure(), 1.0 - x.measure(), 1e-12);
        EXPECT_TRUE(intersection(x, x.complement()).total_length() < 1e-12);
    }
    EXPECT_NEAR(ArcSet::full().measure(), 1.0, 1e-15);
    EXPECT_TRUE(ArcSet::full().complement().empty());
}

TEST(Arcs, AngularDistanceMatchesScan) {
    std::mt19937_64 rng(6);
    const auto s = ArcSet::from_arcs(random_arcs(rng, 4, 0.3));
    for (int i = 0; i < 100; ++i) {
        const double th = two_pi * (i + 0.5) / 100;
        double best = s.contains(th) ? 0.0 : pi;
        for (const auto& p : s.pieces())
            for (double e : {p.lo, p.hi}) best = std::min(best, disk::angle_gap(th, e));
        EXPECT_NEAR(s.angular_distance(th), best, 1e-12);
    }
}

TEST(Arcs, ArcUnionAgreesWithArcSet) {
    std::mt19937_64 rng(8);
    ArcUnion u;
    std::vector<Arc> all;
    for (const auto& a : random_arcs(rng, 300, 0.05)) {
        u.insert(a);
        all.push_back(a);
    }
    const auto s = ArcSet::from_arcs(all);
    EXPECT_NEAR(u.total_length(), s.total_length(), 1e-10);
    for (const auto& a : random_arcs(rng, 300, 0.01)) EXPECT_EQ(u.meets(a), s.intersects(a));
    for (int i = 0; i < 1000; ++i) {
        const double th = two_pi * (i + 0.5) / 1000;
        EXPECT_EQ(u.contains(th), s.contains(th));
    }
}

TEST(Arcs, PairPredicates) {
    const Arc a{0.0, 1.0}, b{0.5, 0.2}, c{2.0, 0.5};
    EXPECT_TRUE(arc_within(b, a));
    EXPECT_FALSE(arc_within(a, b));
    EXPECT_TRUE(arcs_meet(a, b));
    EXPECT_FALSE(arcs_meet(a, c));
    EXPECT_NEAR(arc_gap(a, c), 1.0, 1e-12);
    EXPECT_NEAR(Arc::centered(1.0, 0.25).length, 0.5, 1e-15);
    EXPECT_NEAR((Arc{0.0, pi}).visual_diameter(), 1.0, 1e-15);
}
