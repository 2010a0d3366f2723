#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "hyperlab/lab.hpp"

using namespace hyperlab;
using namespace hyperlab::lab;
using disk::ModelPoint;

namespace {

const Workspace& point_ws() {
    static const Workspace ws = make_workspace(group::genus2(), TargetSpec::point(), 10.0);
    return ws;
}

const Workspace& geodesic_ws() {
    static const Workspace ws = make_workspace(group::genus2(), TargetSpec::closed_geodesic({1}), 8.0);
    return ws;
}

ExperimentConfig config(const std::string& rate, double T1, double T2) {
    ExperimentConfig c;
    c.rate = jb::parse_rate(rate);
    c.T1 = T1;
    c.T2 = T2;
    c.horizon = T2;
    return c;
}

}  // namespace

// A direction inside a stage arc sees the orbit point within C e^-f(rho); just outside, it does not.
TEST(LabStage, PointArcsMatchProximity) {
    const auto cfg = config("linear 0.5", 6.0, 8.0);
    const auto st = shrinking_target_stage(point_ws(), cfg);
    ASSERT_GT(st.arcs.size(), 100u);
    for (std::size_t i = 0; i < st.arcs.size(); i += st.arcs.size() / 100) {
        const auto& a = st.arcs[i];
        const ModelPoint p = point_ws().tops[a.source].top;
        const double r = cfg.C * std::exp(-cfg.f(a.depth));
        const double edge = 0.5 * a.arc.length;
        EXPECT_LE(ray_point_distance(a.arc.center(), p), 1e-9);
        EXPECT_NEAR(ray_point_distance(a.arc.center() + edge, p), r, 0.02 * r);
        EXPECT_GT(ray_point_distance(a.arc.center() + 1.5 * edge, p), r);
        EXPECT_NEAR(a.scale, std::exp(-(a.depth + cfg.f(a.depth))), 1e-15);
    }
}

TEST(LabStage, SpiralArcsStayInTube) {
    auto cfg = config("linear 1", 5.0, 7.0);
    cfg.target = TargetSpec::closed_geodesic({1});
    const auto st = spiral_trap_stage(geodesic_ws(), cfg);
    ASSERT_FALSE(st.arcs.empty());
    const double c8 = spiral_entry_delay(cfg.eps);
    for (std::size_t i = 0; i < st.arcs.size(); i += std::max<std::size_t>(1, st.arcs.size() / 50)) {
        const auto& a = st.arcs[i];
        const auto& line = geodesic_ws().tops[a.source].axis;
        for (double th : {a.arc.center(), a.arc.start, a.arc.end() - 1e-12}) {
            double worst = 0.0;
            for (double t = a.depth + c8; t <= a.depth + cfg.f(a.depth); t += 0.05)
                worst = std::max(worst, disk::dist_to_geodesic(ModelPoint::from_polar(t, th), line).distance);
            EXPECT_LT(worst, cfg.eps);
        }
    }
    EXPECT_THROW(spiral_trap_stage(point_ws(), config("linear 1", 5.0, 7.0)), Error);
}

TEST(LabStage, SegmentShadowEndsSeeTheAxisPoints) {
    const auto& t = geodesic_ws().tops.at(3);
    const auto [a, b] = segment_shadow(t, 1.0);
    const auto m = disk::Isometry::moving_origin_to(t.top);
    const double psi = m.inverse().apply(t.axis.first).angle();
    const ModelPoint pa = m.apply(ModelPoint(std::polar(std::tanh(0.5), psi)));
    EXPECT_NEAR(disk::distance(pa, t.top), 1.0, 1e-9);
    EXPECT_LT(ray_point_distance(a, pa), 1e-7);
    EXPECT_GT(disk::angle_gap(a, b), 0.0);
}

TEST(LabConfig, Guards) {
    auto c = config("linear 1", 8.0, 7.0);
    EXPECT_THROW(c.validate(), Error);
    c = config("linear 1", 8.0, 31.0);
    try {
        c.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 4);
    }
    c = config("linear 1", 6.0, 8.0);
    c.eps = 0.5;
    EXPECT_THROW(c.validate(), Error);
    EXPECT_THROW(shrinking_target_stage(point_ws(), config("linear 1", 8.0, 12.0)), Error);
}

TEST(LabConfig, DefaultLadder) {
    const auto c = config("linear 1", 8.0, 11.0);
    const auto l = default_ladder(c);
    ASSERT_EQ(l.size(), 13u);
    EXPECT_NEAR(l.front(), c.scale(8.0), 1e-15);
    EXPECT_NEAR(l.back(), c.scale(11.0), 1e-15);
    for (std::size_t i = 1; i < l.size(); ++i) EXPECT_NEAR(std::log(l[i - 1] / l[i]), 0.5, 1e-12);
}

TEST(LabZeroOne, DivergentSaturatesConvergentThins) {
    auto div = config("log 0.5", 0.0, 10.0);
    auto conv = config("linear 1", 0.0, 10.0);
    div.samples = conv.samples = 4000;
    const auto a = zero_one_monte_carlo(point_ws(), div, HitMode::point_proximity);
    const auto b = zero_one_monte_carlo(point_ws(), conv, HitMode::point_proximity);
    EXPECT_EQ(a.test.verdict, jb::Verdict::diverges);
    EXPECT_EQ(b.test.verdict, jb::Verdict::converges);
    for (std::size_t i = 1; i < a.fractions.size(); ++i) EXPECT_GE(a.fractions[i], a.fractions[i - 1]);
    EXPECT_GE(a.fractions.back(), 0.9);
    EXPECT_LT(b.fractions.back(), a.fractions.back());
    EXPECT_GT(b.decay_factor, 1.0);
    EXPECT_GT(a.trend, 0.0 - 1e-12);
}

TEST(LabZeroOne, RotationEquivariance) {
    auto cfg = config("log 0.5", 0.0, 8.0);
    cfg.samples = 4000;
    const auto pres = group::genus2();
    const auto rotated = conjugate(pres, disk::Isometry::rotation(0.7));
    ASSERT_EQ(rotated.prune, group::PruneRule::dirichlet);
    const auto ws = make_workspace(rotated, TargetSpec::point(), 8.0);
    const auto ws0 = make_workspace(pres, TargetSpec::point(), 8.0);
    const auto a = zero_one_monte_carlo(ws0, cfg, HitMode::point_proximity);
    const auto b = zero_one_monte_carlo(ws, cfg, HitMode::point_proximity);
    ASSERT_EQ(a.fractions.size(), b.fractions.size());
    for (std::size_t i = 0; i < a.fractions.size(); ++i) {
        const double s = std::hypot(a.sigma(i), b.sigma(i));
        EXPECT_LE(std::fabs(a.fractions[i] - b.fractions[i]), 2.0 * s + 1e-12) << "horizon " << a.horizons[i];
    }
    // A translated conjugate is no longer cocompact-with-Dirichlet-pruning, so sampling refuses it.
    const auto moved = conjugate(pres, disk::Isometry::translation(0.3, 0.0));
    EXPECT_EQ(moved.prune, group::PruneRule::margin);
}

TEST(LabZeroOne, DirectionsIndependentOfWorkers) {
    setenv("HYPERLAB_WORKERS", "1", 1);
    const auto one = sample_directions(5000, 7);
    setenv("HYPERLAB_WORKERS", "5", 1);
    const auto five = sample_directions(5000, 7);
    unsetenv("HYPERLAB_WORKERS");
    EXPECT_EQ(one, five);
    EXPECT_NE(one, sample_directions(5000, 8));
}

TEST(LabZeroOne, ModeNeedsMatchingTarget) {
    auto cfg = config("linear 1", 0.0, 6.0);
    EXPECT_THROW(hit_arcs(point_ws(), cfg, HitMode::tube_dwell), Error);
    EXPECT_THROW(hit_arcs(geodesic_ws(), cfg, HitMode::point_proximity), Error);
    cfg.horizon = 11.0;
    EXPECT_THROW(hit_arcs(point_ws(), cfg, HitMode::point_proximity), Error);
}

TEST(LabIntersect, IntersectionLiesInEveryStage) {
    auto a = config("linear 0.5", 6.0, 8.0), b = config("linear 1", 6.0, 8.0);
    const auto dy = boundary::build_dyadic(point_ws().ball, 1.0, 1.0);
    const auto rep = intersect_experiment(point_ws(), {a, b}, dy, 3);
    ASSERT_FALSE(rep.empty);
    EXPECT_DOUBLE_EQ(rep.configs[1].T1, 6.5);
    std::vector<ArcSet> sets;
    for (const auto& s : rep.stages) sets.push_back(s.set());
    for (const auto& x : rep.intersection) {
        const double mid = x.arc.center();
        for (const auto& s : sets) EXPECT_TRUE(s.contains(mid));
    }
    for (int i = 0; i < 20000; ++i) {
        const double th = disk::two_pi * (i + 0.5) / 20000;
        if (sets[0].contains(th) && sets[1].contains(th)) EXPECT_TRUE(rep.set.contains(th));
    }
    EXPECT_LE(rep.measure, std::min(rep.stage_measures[0], rep.stage_measures[1]) + 1e-12);
    for (const auto& [g, d] : rep.density) {
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 1.0);
    }
    EXPECT_THROW(intersect_experiment(point_ws(), {a}, dy, 3), Error);
}
