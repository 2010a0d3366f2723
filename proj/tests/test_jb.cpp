#include <cmath>

#include <gtest/gtest.h>

#include "hyperlab/formulas.hpp"
#include "hyperlab/jb.hpp"

using namespace hyperlab;
using namespace hyperlab::jb;
using tree::Word;

namespace {

DirichletSystem single_ball(double center, double r) {
    DirichletSystem sys;
    sys.balls.push_back({"x", center, r, -std::log(r)});
    return sys;
}

// m balls of visual radius rr spread evenly through the middle half of Dir.
std::vector<Arc> colony(const DirichletSystem& sys, int m, double rr) {
    const Arc dir = sys.balls[0].arc();
    std::vector<Arc> out;
    for (int i = 0; i < m; ++i) {
        const double c = dir.start + dir.length * (0.25 + 0.5 * (i + 0.5) / m);
        out.push_back(boundary::visual_ball(c, rr));
    }
    return out;
}

const tree::FreeGroup f2(2);

}  // namespace

TEST(JbDisk, FullDirichletBall) {
    const auto sys = single_ball(1.0, 0.01);
    const auto ab = alpha_beta(sys, 0, {sys.balls[0].arc()});
    EXPECT_DOUBLE_EQ(ab.alpha, 1.0);
    EXPECT_NEAR(ab.beta, 0.0, 1e-9);
}

TEST(JbDisk, SquaredRadiusBall) {
    const double r = 0.01;
    const auto sys = single_ball(1.0, r);
    const auto ab = alpha_beta(sys, 0, {boundary::visual_ball(1.0, r * r)});
    EXPECT_NEAR(ab.alpha, 2.0, 1e-12);
    EXPECT_NEAR(ab.beta, 0.0, 1e-3);
}

TEST(JbDisk, ColonyOfTenBalls) {
    const double r = 0.01;
    const auto sys = single_ball(2.0, r);
    const auto ab = alpha_beta(sys, 0, colony(sys, 10, r * r));
    EXPECT_NEAR(ab.alpha, 2.0, 1e-12);
    // beta = 2 - log(10 r^2) / log r = log 10 / log(1/r)
    EXPECT_NEAR(ab.beta, 0.5, 1e-3);
    EXPECT_EQ(ab.colony.centers.size(), 10u);
}

TEST(JbDisk, BetaMatchesItsDefinition) {
    const auto sys = single_ball(3.0, 0.02);
    for (int m : {1, 3, 7, 20}) {
        const auto ab = alpha_beta(sys, 0, colony(sys, m, 0.02 * 0.02 * 0.5));
        EXPECT_NEAR(ab.beta, sys.D * (ab.alpha - std::log(ab.mu_F) / std::log(ab.mu_dir)), 1e-12);
        EXPECT_GE(ab.colony.mass, ab.mu_F * sys.regularity * capture_fraction(sys.D) * (1 - 1e-9));
    }
}

TEST(JbDisk, AddingColonyBallsRaisesBeta) {
    const double r = 0.01;
    const auto sys = single_ball(2.0, r);
    double last = -1.0;
    for (int m : {1, 2, 5, 10}) {
        const auto ab = alpha_beta(sys, 0, colony(sys, m, r * r));
        EXPECT_NEAR(ab.alpha, 2.0, 1e-12);
        EXPECT_GT(ab.beta, last);
        last = ab.beta;
    }
}

TEST(JbDisk, InputGuards) {
    const auto sys = single_ball(1.0, 0.01);
    EXPECT_THROW(alpha_beta(sys, 0, {boundary::visual_ball(4.0, 1e-4)}), Error);
    EXPECT_THROW(alpha_beta(sys, 1, {sys.balls[0].arc()}), Error);
    EXPECT_THROW(alpha_beta(sys, 0, {}), Error);
}

TEST(JbTree, HandComputedExponents) {
    struct Case {
        Word x;
        std::vector<Word> F;
        Rational alpha;
        std::optional<Rational> beta;
        double beta_value;
    };
    const std::vector<Case> cases{
        {{0}, {{0}}, Rational(1), Rational(0), 0.0},
        {{0}, {{0, 0}}, Rational(2), Rational(0), 0.0},
        {{0}, {{0, 0}, {0, 1}}, Rational(2), std::nullopt, std::log(2.0) / std::log(3.0)},
        {{0}, {{0, 0}, {0, 1}, {0, 3}}, Rational(1), Rational(0), 0.0},
        {{0, 1}, {{0, 1, 1, 1}}, Rational(2), Rational(0), 0.0},
        {{0, 1}, {{0, 1, 1, 1}, {0, 1, 1, 0}, {0, 1, 1, 2}}, Rational(3, 2), Rational(0), 0.0},
        {{0}, {{0, 0, 0}, {0, 1, 1}, {0, 3, 3}}, Rational(3), Rational(1), 1.0},
    };
    for (const auto& c : cases) {
        const auto r = alpha_beta_tree(f2, c.x, c.F);
        EXPECT_EQ(r.alpha, c.alpha) << tree::to_string(c.F.front());
        EXPECT_EQ(r.beta_over_D, c.beta);
        EXPECT_NEAR(r.beta_over_D_value, c.beta_value, 1e-12);
    }
    EXPECT_THROW(alpha_beta_tree(f2, {0}, {{1, 0}}), Error);
    EXPECT_THROW(alpha_beta_tree(f2, {}, {{1}}), Error);
}

TEST(JbTree, ColonyListsTheDepthCylinders) {
    const auto r = alpha_beta_tree(f2, {0}, {{0, 0}, {0, 1, 1}});
    EXPECT_EQ(r.packing_depth, 3);
    EXPECT_EQ(r.balls, 4u);
    EXPECT_EQ(r.colony.size(), 4u);
    for (const auto& w : r.colony) EXPECT_EQ(w.size(), 3u);
    EXPECT_EQ(r.nu_F, Rational(4, 27));
}

TEST(JbOmega, ExponentDefinition) {
    EXPECT_EQ(omega_exponent(0.1, 1.0, 10.0), 1);
    EXPECT_EQ(omega_exponent(0.01, 1.0, 10.0), 2);
    EXPECT_EQ(omega_exponent(0.0099, 1.0, 10.0), 3);
}

TEST(JbOmega, TreeDepthPatterns) {
    const std::vector<double> ks{3.0 * std::exp(9.0), 3.0 * std::exp(17.0)};
    const std::vector<Word> probes{{0}, {0, 1}};
    std::vector<int> all, even, thinned;
    for (int n = 1; n <= 64; ++n) {
        all.push_back(n);
        if (n % 2 == 0) even.push_back(n);
        if ((n & (n - 1)) == 0) thinned.push_back(n);
    }
    EXPECT_EQ(omega_tree(f2, all, 1.0 / 3.0, probes, ks).omega_bar, 1);
    EXPECT_EQ(omega_tree(f2, even, 1.0 / 3.0, probes, ks).omega_bar, 1);
    EXPECT_EQ(omega_tree(f2, thinned, 1.0 / 3.0, probes, ks).omega_bar, 2);
    // c = 1 asks the half ball to carry the whole mass.
    EXPECT_TRUE(omega_tree(f2, all, 1.0, probes, ks).infinite());
    EXPECT_THROW(omega_tree(f2, all, 0.0, probes, ks), Error);
}

TEST(JbBounds, RationalBounds) {
    const Aggregates<Rational> a{Rational(2), Rational(2), Rational(1, 2), Rational(1, 2)};
    const auto b = dimension_bounds(a, Rational(1), 1);
    EXPECT_EQ(b.lower, Rational(3, 4));
    EXPECT_EQ(b.upper, Rational(3, 4));
    EXPECT_TRUE(b.exact);
    const auto t = dimension_bounds(a, Rational(1), 2);
    EXPECT_EQ(t.lower, Rational(3, 8));
    EXPECT_FALSE(t.exact);
    const auto inf = dimension_bounds(a, Rational(1), omega_infinite);
    EXPECT_EQ(inf.lower, Rational(0));
    EXPECT_TRUE(inf.omega_infinite);
    EXPECT_FALSE(inf.warning.empty());
    EXPECT_THROW(dimension_bounds(Aggregates<Rational>{}, Rational(1), 1), Error);
}

TEST(JbBorelCantelli, Verdicts) {
    const auto zero = RateFunction::constant(0.0);
    struct Case {
        RateFunction phi;
        Verdict v;
    };
    const std::vector<Case> cases{
        {RateFunction::linear(1.0), Verdict::converges},     {RateFunction::linear(0.1), Verdict::converges},
        {RateFunction::logarithmic(2.0), Verdict::converges}, {RateFunction::logarithmic(1.0), Verdict::diverges},
        {RateFunction::logarithmic(0.5), Verdict::diverges},  {RateFunction::constant(3.0), Verdict::diverges},
        {RateFunction::affine(0.5, 1.0), Verdict::converges},
    };
    for (const auto& c : cases) {
        const auto t = borel_cantelli(c.phi, zero, 1.0);
        EXPECT_EQ(t.verdict, c.v) << to_string(c.phi);
        // The quadrature tail agrees with the verdict.
        if (c.v == Verdict::converges)
            EXPECT_LT(t.integral_1e6 / t.integral_1e3, 1.01) << to_string(c.phi);
        else
            EXPECT_GT(t.integral_1e6 / t.integral_1e3, 1.5) << to_string(c.phi);
    }
    // Growth of the target count cancels the decay.
    EXPECT_EQ(borel_cantelli(RateFunction::linear(1.0), RateFunction::linear(1.0), 1.0).verdict, Verdict::diverges);
    EXPECT_EQ(borel_cantelli(RateFunction::linear(1.0), RateFunction::linear(1.0), 2.0).verdict, Verdict::converges);
    EXPECT_THROW(borel_cantelli(zero, zero, 0.0), Error);
}

TEST(JbBorelCantelli, RateText) {
    EXPECT_EQ(parse_rate("linear 1").family, Family::linear);
    EXPECT_DOUBLE_EQ(parse_rate("log 0.5").a, 0.5);
    EXPECT_DOUBLE_EQ(parse_rate("affine 1 2")(3.0), 5.0);
    EXPECT_THROW(parse_rate("affine 1"), Error);
    EXPECT_THROW(parse_rate("cubic 1"), Error);
}

TEST(JbStage, FiniteStageWindow) {
    DirichletSystem sys;
    std::vector<std::vector<Arc>> F;
    for (int i = 1; i <= 5; ++i) {
        sys.balls.push_back({std::to_string(i), 1.0 * i, std::exp(-1.0 * i), 1.0 * i});
        F.push_back({sys.balls.back().arc()});
    }
    const auto s = finite_stage(sys, F, 2.0, 4.0);
    double expect = 0.0;
    for (int i = 2; i <= 4; ++i) expect += sys.balls[i - 1].arc().length;
    EXPECT_NEAR(s.total_length(), expect, 1e-12);
    EXPECT_THROW(finite_stage(sys, F, 4.0, 2.0), Error);
}

class JbCantor : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        sys_ = new DirichletSystem(dirichlet_from_orbit(group::orbit_ball(group::genus2(), 10.0)));
        F_ = new std::vector<std::vector<Arc>>();
        for (const auto& b : sys_->balls) F_->push_back({b.arc()});
    }
    static void TearDownTestSuite() {
        delete sys_;
        delete F_;
    }
    static DirichletSystem* sys_;
    static std::vector<std::vector<Arc>>* F_;
};
DirichletSystem* JbCantor::sys_ = nullptr;
std::vector<std::vector<Arc>>* JbCantor::F_ = nullptr;

TEST_F(JbCantor, ChainIsNestedAndAvoidsCover) {
    const std::vector<Arc> cover{Arc{0.1, 1e-4}, Arc{3.0, 2e-4}};
    const auto chain = cantor_certify(*sys_, *F_, cover, 0.5, 3);
    ASSERT_EQ(chain.links.size(), 3u);
    for (std::size_t i = 1; i < chain.links.size(); ++i)
        EXPECT_TRUE(arc_within(chain.links[i].ball, chain.links[i - 1].ball));
    for (const auto& u : cover) EXPECT_FALSE(u.contains(chain.witness));
    EXPECT_LE(chain.cover_content, certify_threshold);
}

TEST_F(JbCantor, RefusesHeavyCoverAndReportsStall) {
    EXPECT_THROW(cantor_certify(*sys_, *F_, {Arc{0.0, 1.0}}, 0.5, 3), Error);
    try {
        cantor_certify(*sys_, *F_, {}, 0.5, 40);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 3);
    }
}

TEST(Formulas, ReferenceValues) {
    formulas::Params p;
    p.n = 2;
    p.s = 0;
    p.tau = 1;
    EXPECT_DOUBLE_EQ(formulas::evaluate("thm1.1", p).value(), 0.5);
    EXPECT_DOUBLE_EQ(formulas::cusp_tree(1.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(formulas::bianchi(2.0), 1.0);
    EXPECT_THROW(formulas::bianchi(0.5), Error);
    EXPECT_THROW(formulas::evaluate("thm1.2", p), Error);
    EXPECT_THROW(formulas::evaluate("nope", p), Error);
}

TEST(Formulas, SpiralIsShiftedGeneral) {
    using R = Rational;
    for (int n = 2; n <= 5; ++n)
        for (int s = 1; s <= n - 1; ++s)
            for (const R tau : {R(0), R(1, 2), R(1), R(3)}) {
                EXPECT_EQ(formulas::spiral_constant(R(n), R(s), tau), formulas::spiral_general(R(n - 1), R(s - 1), tau));
                EXPECT_EQ(formulas::shrinking_constant(R(n), R(s), tau),
                          formulas::shrinking_general(R(n - 1), R(n), R(s), tau, R(1)).lower);
            }
}

TEST(Formulas, PinchingAndIntersection) {
    using R = Rational;
    const auto flat = formulas::shrinking_general(R(1), R(2), R(0), R(1), R(1));
    EXPECT_EQ(flat.lower, flat.upper);
    const auto pinched = formulas::shrinking_general(R(1), R(2), R(0), R(1), R(2));
    EXPECT_LT(pinched.lower, pinched.upper);
    const std::vector<R> taus{R(1, 2), R(1), R(2)}, dims{R(0), R(0), R(1)};
    const auto li = formulas::large_intersection(R(2), taus, dims, R(1));
    R best = formulas::shrinking_constant(R(2), dims[0], taus[0]);
    for (int i = 1; i < 3; ++i) best = std::min(best, formulas::shrinking_constant(R(2), dims[i], taus[i]));
    EXPECT_EQ(li.lower, best);
}
