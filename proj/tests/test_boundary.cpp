#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hyperlab/boundary.hpp"

using namespace hyperlab;
using namespace hyperlab::boundary;
using disk::ModelPoint;

namespace {

// Distance from p to the ray from 0 towards theta, by dense sampling.
double ray_distance(const ModelPoint& p, double theta, double length) {
    double best = 1e300;
    for (int k = 0; k <= 40000; ++k)
        best = std::min(best, disk::distance(p, ModelPoint::from_polar(length * k / 40000.0, theta)));
    return best;
}

const group::OrbitBall& ball9() {
    static const auto b = group::orbit_ball(group::genus2(), 9.0);
    return b;
}

const DiskDyadic& dyadic9() {
    static const auto d = build_dyadic(ball9(), 1.0, 1.0);
    return d;
}

}  // namespace

TEST(Boundary, ShadowEdgeRaysGrazeTheBall) {
    for (double rho : {2.0, 4.0, 7.0}) {
        for (double R : {0.5, 1.0}) {
            const double th = 0.9;
            const ModelPoint p = ModelPoint::from_polar(rho, th);
            const double w = shadow_half_width(rho, R);
            EXPECT_NEAR(ray_distance(p, th + w, rho + 2.0), R, 1e-4);
            EXPECT_LT(ray_distance(p, th + 0.9 * w, rho + 2.0), R);
            EXPECT_GT(ray_distance(p, th + 1.1 * w, rho + 2.0), R);
        }
    }
    EXPECT_EQ(shadow_half_width(0.5, 1.0), disk::pi);
}

TEST(Boundary, TreeShadowIsPrefixCylinder) {
    const auto s = shadow(Word{0, 1, 1, 3}, 1);
    EXPECT_EQ(s.cylinder, (Word{0, 1, 1}));
    EXPECT_TRUE(shadow(Word{0}, 2).full);
}

TEST(Boundary, LebesgueShadowLemma) {
    double lo = 1e300, hi = 0.0;
    LebesgueMeasure mu;
    for (const auto& e : ball9().elements) {
        if (e.rho < 4.0) continue;
        const double q = mu.of(shadow(e, 1.0).cell) / std::exp(-e.rho);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 1.5);
}

TEST(Boundary, SchottkyMeasureIsAdditive) {
    const auto p = group::schottky(2, 4.0);
    const SchottkyMeasure mu(p, 0.5, 6);
    EXPECT_NEAR(mu.of(Arc{0.0, two_pi}), mu.total(), 1e-12 * mu.total());
    for (double cut : {0.3, 1.7, 4.0}) {
        const double a = mu.of(Arc{0.0, cut}), b = mu.of(Arc{cut, two_pi - cut});
        EXPECT_NEAR(a + b, mu.total(), 1e-12 * mu.total());
    }
    EXPECT_GE(mu.sample(0.3, 0.5), 0.0);
}

TEST(Boundary, DiskDyadicAxioms) {
    const auto& dy = dyadic9();
    EXPECT_TRUE(dy.report.all()) << dy.report.failure;
    EXPECT_GE(dy.report.A, 1.0);
    EXPECT_TRUE(std::isfinite(dy.report.C));
}

// Independent recheck: each generation tiles the circle and refines the previous one.
TEST(Boundary, DiskDyadicGenerationsAreNestedPartitions) {
    const auto& dy = dyadic9();
    ASSERT_GE(dy.generations.size(), 3u);
    for (std::size_t n = 0; n < dy.generations.size(); ++n) {
        const auto& g = dy.generations[n];
        double total = 0.0;
        std::vector<Arc> arcs;
        for (const auto& c : g) {
            total += c.arc.length;
            arcs.push_back(c.arc);
        }
        EXPECT_NEAR(total, two_pi, 1e-9);
        EXPECT_NEAR(ArcSet::from_arcs(arcs).total_length(), two_pi, 1e-9);
        if (n == 0) continue;
        for (const auto& c : g) {
            bool inside = false;
            for (const auto& a : dy.generations[n - 1]) inside = inside || arc_within(c.arc, a.arc, 1e-9);
            EXPECT_TRUE(inside) << "generation " << n;
        }
    }
    EXPECT_GE(overlap_count(dy, 1.0), 1u);
    std::ostringstream os;
    export_dyadic(os, dy);
    std::size_t lines = 0, cells = 0;
    for (char ch : os.str()) lines += ch == '\n';
    for (const auto& g : dy.generations) cells += g.size();
    EXPECT_EQ(lines, cells);
}

TEST(Boundary, TreeDyadicIsSphereCylinders) {
    const tree::FreeGroup f(2);
    const auto dy = build_dyadic(f, 6);
    EXPECT_TRUE(dy.report.all());
    EXPECT_DOUBLE_EQ(dy.report.A, 1.0);
    for (int n = 0; n <= 6; ++n) EXPECT_EQ(dy.generations[n].size(), f.sphere_size(n));
}

TEST(Boundary, WhitneyCircleMinusPoint) {
    const double p = 0.4;
    const auto rep = whitney(OpenSet::circle_minus_point(p), dyadic9(), 12.0);
    ASSERT_FALSE(rep.cells.empty());
    EXPECT_TRUE(rep.inequality);
    EXPECT_TRUE(rep.unique_points);
    std::vector<Arc> arcs;
    for (const auto& c : rep.cells) {
        const Arc& a = c.cell.arc;
        ASSERT_FALSE(a.contains(p));
        const double gap = std::min(disk::angle_gap(a.start, p), disk::angle_gap(a.end(), p));
        EXPECT_NEAR(c.dist, std::sin(0.5 * gap), 1e-12);
        EXPECT_LE(c.diam, c.dist / 12.0);
        arcs.push_back(a);
    }
    double total = 0.0;
    for (const auto& a : arcs) total += a.length;
    EXPECT_NEAR(ArcSet::from_arcs(arcs).total_length(), total, 1e-9);
    EXPECT_GT(rep.covered, 0.9);
    EXPECT_THROW(whitney(OpenSet::circle_minus_point(p), dyadic9(), 5.0), Error);
}

TEST(Boundary, TreeWhitneyTilesCylinder) {
    const tree::FreeGroup f(2);
    const auto rep = whitney(f, Word{0, 1}, 12.0);
    EXPECT_TRUE(rep.inequality);
    EXPECT_TRUE(rep.tiles);
    // A e^{-n} <= e^{-1} first holds at n = 4: two levels below C(0.1).
    EXPECT_EQ(rep.cells.size(), 9u);
    for (const auto& c : rep.cells) EXPECT_TRUE(tree::is_prefix(Word{0, 1}, c.cylinder));
}
