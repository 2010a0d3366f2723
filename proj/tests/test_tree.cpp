#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hyperlab/tree.hpp"

using namespace hyperlab;
using namespace hyperlab::tree;

TEST(Tree, ReductionAndInverse) {
    const FreeGroup g(2);
    EXPECT_TRUE(g.is_reduced({0, 1, 0}));
    EXPECT_FALSE(g.is_reduced({0, 2}));
    EXPECT_EQ(g.reduce({0, 1, 3, 2}), Word{});
    const Word w{0, 1, 1, 3 - 3, 2 - 2};
    EXPECT_EQ(g.multiply(g.reduce(w), g.invert(g.reduce(w))), Word{});
}

TEST(Tree, SphereSizes) {
    for (int k : {1, 2, 3}) {
        const FreeGroup g(k);
        std::uint64_t total = 0;
        for (int n = 0; n <= 5; ++n) {
            const auto s = g.sphere(n);
            EXPECT_EQ(s.size(), g.sphere_size(n));
            for (const auto& w : s) EXPECT_TRUE(g.is_reduced(w));
            EXPECT_EQ(std::set<Word>(s.begin(), s.end()).size(), s.size());
            total += s.size();
        }
        EXPECT_EQ(total, g.ball_size(5));
    }
}

TEST(Tree, Children) {
    const FreeGroup g(2);
    EXPECT_EQ(g.children({}).size(), 4u);
    EXPECT_EQ(g.children({1}).size(), 3u);
    for (const auto& c : g.children({1})) EXPECT_NE(c.back(), 3);
}

TEST(Tree, WordText) {
    EXPECT_EQ(parse_word("0.1.3"), (Word{0, 1, 3}));
    EXPECT_EQ(parse_word("e"), Word{});
    EXPECT_EQ(parse_word(to_string({2, 0, 2})), (Word{2, 0, 2}));
    EXPECT_THROW(parse_word("a.b"), Error);
}

TEST(Tree, RayGromovProduct) {
    const FreeGroup g(2);
    const Ray a(g, {0, 1}, {0}), b(g, {0, 1, 1}, {1}), c(g, {}, {0});
    EXPECT_EQ(gromov_product(a, b), 2);
    EXPECT_EQ(gromov_product(a, c), 1);
    EXPECT_EQ(gromov_product(a, a), -1);
    EXPECT_DOUBLE_EQ(visual_distance(a, b), std::exp(-2.0));
    EXPECT_THROW(Ray(g, {0}, {2}), Error);
}

TEST(Tree, VisualMetricIsUltrametric) {
    const FreeGroup g(2);
    std::mt19937_64 rng(1);
    auto random_ray = [&] {
        Word p;
        const int n = static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            Letter l;
            do l = static_cast<Letter>(rng() % 4);
            while (!p.empty() && l == g.inverse(p.back()));
            p.push_back(l);
        }
        Letter per;
        do per = static_cast<Letter>(rng() % 4);
        while (!p.empty() && per == g.inverse(p.back()));
        return Ray(g, p, {per});
    };
    for (int i = 0; i < 500; ++i) {
        const auto x = random_ray(), y = random_ray(), z = random_ray();
        EXPECT_LE(visual_distance(x, z), std::max(visual_distance(x, y), visual_distance(y, z)) + 1e-15);
    }
}

TEST(Tree, ActionAndRayDistance) {
    const FreeGroup g(2);
    const Ray xi(g, {}, {0});
    const Ray moved = apply(g, {2}, xi);  // a^-1 a a a ... = a a a ...
    EXPECT_EQ(gromov_product(moved, xi), -1);
    EXPECT_EQ(dist_to_ray({0, 0, 1}, xi), 1u);
    EXPECT_EQ(dist_to_ray({1}, xi), 1u);
    EXPECT_EQ(distance({0, 1}, {0, 0}), 2u);
}
