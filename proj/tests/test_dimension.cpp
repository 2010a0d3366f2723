#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyperlab/dimension.hpp"

using namespace hyperlab;
using namespace hyperlab::dimension;
using disk::two_pi;

namespace {

std::vector<Arc> cantor(int generations) {
    std::vector<std::pair<double, double>> iv{{0.0, 1.0}};
    for (int g = 0; g < generations; ++g) {
        std::vector<std::pair<double, double>> next;
        for (auto [a, b] : iv) {
            const double l = (b - a) / 3.0;
            next.push_back({a, a + l});
            next.push_back({b - l, b});
        }
        iv = std::move(next);
    }
    std::vector<Arc> out;
    for (auto [a, b] : iv) out.push_back(Arc{a + 1.0, b - a});
    return out;
}

tree::Word random_cylinder(std::mt19937_64& rng, const tree::FreeGroup& f, int maxlen) {
    tree::Word w;
    const int n = 1 + static_cast<int>(rng() % maxlen);
    while (static_cast<int>(w.size()) < n) {
        const auto l = static_cast<tree::Letter>(rng() % 4);
        if (!w.empty() && l == f.inverse(w.back())) continue;
        w.push_back(l);
    }
    return w;
}

}  // namespace

TEST(Dimension, GridCountMatchesScan) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Arc> arcs;
        for (int i = 0; i < 8; ++i) arcs.push_back(Arc{two_pi * u(rng), 0.2 * u(rng)});
        const auto s = ArcSet::from_arcs(arcs);
        for (double d : {0.3, 0.05, 0.011}) {
            std::uint64_t n = 0;
            for (long k = 0; k * d < two_pi; ++k) {
                bool hit = false;
                for (const auto& p : s.pieces()) hit = hit || (p.lo < (k + 1) * d && p.hi > k * d);
                n += hit;
            }
            EXPECT_EQ(grid_count(s, d), n);
        }
    }
}

TEST(Dimension, MiddleThirdsSlope) {
    const auto s = ArcSet::from_arcs(cantor(14));
    std::vector<double> ladder;
    for (int j = 2; j <= 12; ++j) ladder.push_back(std::pow(3.0, -j));
    const auto est = slope_fit_trimmed(box_count(s, ladder));
    EXPECT_NEAR(est.slope, std::log(2.0) / std::log(3.0), 0.02);
}

TEST(Dimension, LadderGuards) {
    const auto s = ArcSet::from_arc(Arc{0.0, 1.0});
    EXPECT_THROW(box_count(s, {std::exp(-29.0)}), Error);
    EXPECT_THROW(box_count(s, {2.0}), Error);
    const auto series = box_count(s, geometric_ladder(0.5, 0.5, 3));
    EXPECT_THROW(slope_fit(series, 0, 2), Error);
    EXPECT_THROW(slope_fit_trimmed(series), Error);
}

TEST(Dimension, MatchedCountUsesOwnBand) {
    const auto ladder = geometric_ladder(0.1, 0.5, 5);
    std::vector<ScaledArc> cells;
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 1 << j; ++i) {
            const double k = std::floor(0.3 * i / ladder[j]) + 0.25;
            cells.push_back({Arc{k * ladder[j], 0.5 * ladder[j]}, ladder[j]});
        }
    const auto s = box_count_matched(cells, ladder);
    for (int j = 0; j < 5; ++j) EXPECT_EQ(s.counts[j], std::uint64_t{1} << j);
}

TEST(Dimension, ContentBounds) {
    const Arc a{0.5, 0.4};
    EXPECT_NEAR(content(ArcSet::from_arc(a), 0.7, 1e-9).value, std::pow(std::sin(0.1), 0.7), 1e-12);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<Arc> arcs;
        for (int i = 0; i < 10; ++i) arcs.push_back(Arc{two_pi * u(rng), 0.05 * u(rng)});
        const auto s = ArcSet::from_arcs(arcs);
        for (double t : {0.3, 0.6, 1.0}) {
            const double v = content(s, t, 1e-9).value;
            double pieces = 0.0;
            for (const auto& c : s.components()) pieces += std::pow(c.visual_diameter(), t);
            EXPECT_LE(v, pieces + 1e-12);
            EXPECT_LE(v, 1.0 + 1e-12);
            EXPECT_GT(v, 0.0);
        }
    }
}

// Dynamic programme on the tree against explicit enumeration of every cylinder cover.
TEST(Dimension, TreeContentMatchesExhaustiveSearch) {
    const tree::FreeGroup f(2);
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 60; ++rep) {
        std::vector<tree::Word> cells;
        const int k = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < k; ++i) cells.push_back(random_cylinder(rng, f, 3));
        for (double t : {0.2, 0.5, std::log(3.0), 1.5}) {
            const auto ex = content_tree_exhaustive(f, cells, t, 3);
            EXPECT_NEAR(content_tree(f, cells, t, 3).value, ex.value, 1e-12);
        }
    }
    // Full boundary: the root alone is optimal at the tree's own dimension.
    EXPECT_NEAR(content_tree(f, {{0}, {1}, {2}, {3}}, std::log(3.0), 4).value, 1.0, 1e-12);
}

TEST(Dimension, ModifiedContentTakesSupremum) {
    const auto s = ArcSet::from_arcs(cantor(6));
    const auto m = modified_content(s, 0.5, 1e-9);
    ASSERT_EQ(m.values.size(), default_eps_ladder().size());
    for (double v : m.values) EXPECT_LE(v, m.value);
    EXPECT_NEAR(m.values.front(), content(s, 0.55, 1e-9).value, 1e-15);
}

TEST(Dimension, MetricDensity) {
    const auto ball = group::orbit_ball(group::genus2(), 8.0);
    const auto dy = boundary::build_dyadic(ball, 1.0, 1.0);
    const std::size_t n = dy.generations.size() - 1;
    EXPECT_DOUBLE_EQ(metric_density(ArcSet::full(), dy, n), 1.0);
    const auto s = ArcSet::from_arc(Arc{1.0, 0.5});
    std::size_t hit = 0;
    for (const auto& c : dy.generations[n]) hit += arcs_meet(c.arc, Arc{1.0, 0.5});
    EXPECT_NEAR(metric_density(s, dy, n), static_cast<double>(hit) / dy.generations[n].size(), 1e-12);
    EXPECT_THROW(metric_density(s, dy, n + 1), Error);
}
