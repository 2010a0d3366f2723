#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hyperlab/group.hpp"

using namespace hyperlab;
using namespace hyperlab::group;
using disk::Isometry;
using disk::ModelPoint;

namespace {

// Orbit points rounded to a grid far finer than their separation inside radius 8.
std::pair<long long, long long> key(const Isometry& g) {
    const auto z = g.apply(disk::Complex(0.0, 0.0));
    return {std::llround(z.real() * 1e8), std::llround(z.imag() * 1e8)};
}

}  // namespace

TEST(Group, Genus2RelatorCloses) {
    const auto p = genus2();
    ASSERT_EQ(p.generators.size(), 8u);
    EXPECT_LT(p.relator_defect(), 1e-10);
    EXPECT_NEAR(p.min_generator_length(), genus2_side_length(), 1e-12);
    for (int k = 0; k < 8; ++k) {
        const auto e = p.generators[k] * p.generators[p.inverse(static_cast<Letter>(k))];
        EXPECT_LT(e.entry_distance(Isometry::identity()), 1e-12);
    }
}

// Breadth-first search over group elements by word length, deduplicated by orbit point.
TEST(Group, Genus2BallMatchesWordSearch) {
    const auto p = genus2();
    const double T = 5.0;
    std::map<std::pair<long long, long long>, double> seen{{key(Isometry::identity()), 0.0}};
    std::vector<Isometry> level{Isometry::identity()};
    std::vector<std::size_t> new_inside;
    for (int len = 1; len <= 7; ++len) {
        std::vector<Isometry> next;
        std::size_t inside = 0;
        for (const auto& g : level)
            for (const auto& s : p.generators) {
                const Isometry h = g * s;
                if (seen.emplace(key(h), h.displacement()).second) {
                    next.push_back(h);
                    inside += h.displacement() <= T;
                }
            }
        new_inside.push_back(inside);
        level = std::move(next);
    }
    // Word length 7 adds nothing below T, so the search is complete there.
    ASSERT_EQ(new_inside.back(), 0u);
    std::size_t expected = 0;
    for (const auto& [k, rho] : seen) expected += rho <= T;

    const auto ball = orbit_ball(p, T);
    EXPECT_EQ(ball.elements.size(), expected);
    std::set<std::pair<long long, long long>> got;
    for (const auto& e : ball.elements) {
        EXPECT_LE(e.rho, T);
        EXPECT_NEAR(e.rho, p.evaluate(e.word).displacement(), 1e-8);
        got.insert(key(e.g));
    }
    EXPECT_EQ(got.size(), ball.elements.size());
    for (const auto& [k, rho] : seen)
        if (rho <= T) EXPECT_TRUE(got.count(k));
}

// Free group: orbit points are in bijection with reduced words.
TEST(Group, SchottkyBallMatchesReducedWords) {
    const auto p = schottky(2, 4.0);
    const double T = 12.0;
    const tree::FreeGroup f(2);
    std::size_t expected = 0;
    double min_last = 1e300;
    const int L = 8;
    for (int n = 0; n <= L; ++n)
        for (const auto& w : f.sphere(n)) {
            const double rho = p.evaluate(w).displacement();
            expected += rho <= T;
            if (n == L) min_last = std::min(min_last, rho);
        }
    ASSERT_GT(min_last, T);
    EXPECT_EQ(orbit_ball(p, T).elements.size(), expected);
}

TEST(Group, Genus2ExponentNearOne) {
    const auto ball = orbit_ball(genus2(), 12.0);
    const auto est = critical_exponent(ball);
    EXPECT_NEAR(est.value, 1.0, 0.1);
    std::uint64_t total = 0;
    for (auto c : ball.annuli) total += c;
    EXPECT_EQ(total, ball.elements.size());
}

TEST(Group, SchottkyExponentBelowOne) {
    const auto est = critical_exponent(orbit_ball(schottky(2, 4.0), 14.0));
    EXPECT_GT(est.value, 0.0);
    EXPECT_LT(est.value, 0.9);
}

TEST(Group, TreeBall) {
    const tree::FreeGroup f(2);
    const auto b = tree_orbit_ball(f, 6);
    EXPECT_EQ(b.words.size(), f.ball_size(6));
    for (int n = 0; n <= 6; ++n) EXPECT_EQ(b.annuli[n], f.sphere_size(n));
    EXPECT_NEAR(critical_exponent(b).value, std::log(3.0), 1e-9);
    const auto all = trail_count(b, {}, 0);
    EXPECT_EQ(all, b.annuli);
}

TEST(Group, CosetTopsAreAxisFeet) {
    const auto p = genus2();
    const double T = 7.0;
    const auto h = p.evaluate({1});
    const double l = h.translation_length();
    const auto ball = orbit_ball(p, T + std::log(std::cosh(0.5 * l)) + 0.5);
    const auto tops = coset_tops(p, ball, SubgroupSpec::cyclic_word({1}), T);
    ASSERT_GT(tops.size(), 10u);
    EXPECT_NO_THROW(check_top_separation(tops));
    for (const auto& t : tops) {
        // Endpoints of g<h>g^-1 and the closed form cosh d = 1 / sin(gap / 2).
        const auto [a, b] = (t.rep * h * t.rep.inverse()).fixed_points();
        const double gap = disk::angle_gap(a.angle(), b.angle());
        EXPECT_NEAR(t.depth, std::acosh(1.0 / std::sin(0.5 * gap)), 1e-7);
        EXPECT_LE(t.depth, T);
        // The representative sits within half a period of the top.
        EXPECT_LE(axis_offset(t.depth, t.rep.displacement()), 0.5 * l + 1e-7);
    }
}

TEST(Group, BuiltinsAndText) {
    EXPECT_EQ(builtin("genus2").generators.size(), 8u);
    EXPECT_EQ(builtin("schottky(3, 5)").rank(), 3);
    EXPECT_EQ(builtin("cyclic(2)").rank(), 1);
    EXPECT_THROW(builtin("nonsense"), Error);
    EXPECT_THROW(schottky(2, 0.5), Error);

    std::istringstream ok("label t\ngenerator a 1.5430806348 0 1.1752011936 0\n");
    const auto q = parse_presentation(ok);
    EXPECT_EQ(q.label, "t");
    EXPECT_NEAR(q.generators[0].displacement(), 2.0, 1e-9);

    std::istringstream bad("generator a 1 0 0 0\nbogus line\n");
    try {
        parse_presentation(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
        EXPECT_EQ(e.exit_code(), 2);
    }
}

TEST(Group, DepthGuard) {
    try {
        orbit_ball(genus2(), 31.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 4);
    }
}
