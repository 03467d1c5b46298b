#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dcqo/plant_nonlinear.hpp"
#include "dcqo/sampling.hpp"
#include "dcqo/verification.hpp"

using namespace dcqo;
using std::numbers::pi;

namespace {

Mat2 rotation_generator()
{
    Mat2 g;
    g << 0, -1, 1, 0;
    return g;
}

// Taylor remainder of exp(x G) for a unit rotation generator G after `order` terms.
double rotation_tail(double x, int order)
{
    double tail = 0.0, term = 1.0;
    for (int n = 1; n <= 80; ++n) {
        term *= x / n;
        if (n > order) tail += term;
    }
    return tail;
}

} // namespace

TEST(BuildWpModel, WorkedExampleA_w)
{
    const WpModel m = build_wp_model(sigma1_observer());
    Mat2 expected;
    expected << 0, -2, 2, 0;
    EXPECT_EQ(m.A_w, expected);
    EXPECT_EQ(m.feedthrough_residual, 0.0);
}

TEST(BuildWpModel, AlphaE2)
{
    const WpModel m = build_wp_model(sigma2_observer());
    Mat2 expected;
    expected << 0, 2, -2, 0;
    EXPECT_EQ(m.A_w, expected);
}

TEST(BuildWpModel, SkewAndNoFeedthroughProperty)
{
    Rng rng(41);
    for (int k = 0; k < 500; ++k) {
        const WpModel m = build_wp_model(random_design(rng));
        EXPECT_LE(max_abs(m.A_w + m.A_w.transpose()), 1e-15);
        EXPECT_NEAR(operator_norm2(m.A_w), 2.0, 1e-12);
        EXPECT_LE(m.feedthrough_residual, 1e-15);
    }
}

TEST(BuildWpModel, RejectsInvalidDesign)
{
    ObserverDesign d = sigma1_observer();
    d.C_o = Row2(3, 0);
    EXPECT_THROW(build_wp_model(d), DesignError);
}

TEST(YoIntegral, ZeroAtZero)
{
    Rng rng(42);
    for (int k = 0; k < 20; ++k) EXPECT_LE(max_abs(yo_integral_coefficients(random_design(rng), 0.0)), 1e-16);
}

TEST(YoIntegral, WorkedExampleCoefficients)
{
    for (double t = 0.0; t <= 20.0; t += 0.41) {
        const Row3 c = yo_integral_coefficients(sigma1_observer(), t);
        EXPECT_NEAR(c(0), -t + std::sin(2 * t) / 2, 1e-13);
        EXPECT_NEAR(c(1), -std::sin(2 * t) / 2, 1e-13);
        EXPECT_NEAR(c(2), (std::cos(2 * t) - 1) / 2, 1e-13);
    }
}

TEST(YoCoefficients, WorkedExample)
{
    for (double t = 0.0; t <= 10.0; t += 0.37) {
        const Row3 c = yo_coefficients(sigma1_observer(), t);
        EXPECT_NEAR(c(0), -(1 - std::cos(2 * t)), 1e-13);
        EXPECT_NEAR(c(1), -std::cos(2 * t), 1e-13);
        EXPECT_NEAR(c(2), -std::sin(2 * t), 1e-13);
    }
}

TEST(YoIntegral, DerivativeMatchesYoProperty)
{
    Rng rng(43);
    const double h = 1e-5;
    for (int k = 0; k < 50; ++k) {
        const ObserverDesign d = random_design(rng);
        const double t = uniform(rng, 0.1, 20.0);
        const Row3 fd = (yo_integral_coefficients(d, t + h) - yo_integral_coefficients(d, t - h)) / (2 * h);
        EXPECT_LE(max_abs(fd - yo_coefficients(d, t)), 1e-6);
    }
}

TEST(YoIntegral, MatchesQuadratureOfYoProperty)
{
    Rng rng(44);
    for (int k = 0; k < 20; ++k) {
        const ObserverDesign d = random_design(rng);
        const Vec3 x0 = random_cube3(rng);
        const double t = uniform(rng, 1.0, 10.0);
        const ScalarFunction y = [&](double s) { return yo_coefficients(d, s) * x0; };
        EXPECT_NEAR(nested_integral(y, t, 0), yo_integral(d, x0(0), x0.tail<2>(), t), 1e-8);
    }
}

TEST(YoSplit, ConsistentWithCoefficients)
{
    Rng rng(45);
    for (int k = 0; k < 50; ++k) {
        const ObserverDesign d = random_design(rng);
        const Vec3 x0 = random_cube3(rng);
        const double t = uniform(rng, 0.0, 10.0);
        const YoCoefficients s = yo_split(d, t);
        const Vec2 v = d.R_o.inverse() * d.beta;
        const double split = s.c_const * x0(0) + s.c_osc * (x0.tail<2>() + v * x0(0));
        EXPECT_NEAR(split, yo_coefficients(d, t) * x0, 1e-11);
    }
}

TEST(PeanoBaker, ConstantCoefficientReproducesExponential)
{
    const Mat2 a = build_wp_model(sigma1_observer()).A_w;
    // ||Lambda A_w|| = 2 t; t = 0.25 keeps the order-10 remainder near 1e-11.
    const PeanoBakerResult r = peano_baker(a, [](double) { return 1.0; }, 0.25, 10);
    EXPECT_LE(max_abs(r.transition - expm(a, 0.25)), 1e-8);
    EXPECT_EQ(r.term_norms.size(), 10u);
}

TEST(PeanoBaker, CosineOverHalfPeriodGivesIdentity)
{
    const Mat2 a = -2.0 * symplectic_j();
    const PeanoBakerResult r = peano_baker(a, [](double t) { return std::cos(t); }, pi, 12);
    EXPECT_LE(max_abs(r.transition - Mat2::Identity()), 1e-8);
}

TEST(PeanoBaker, TruncationTailMatchesTaylorRemainder)
{
    // At order 10 and ||Lambda A_w|| = 2 the remaining terms of the cosine and
    // sine series are still about 5e-5; the series is otherwise exact.
    const Mat2 a = 2.0 * rotation_generator();
    const PeanoBakerResult r = peano_baker(a, [](double) { return 1.0; }, 1.0, 10);
    const double error = max_abs(r.transition - expm(a, 1.0));
    EXPECT_LE(error, rotation_tail(2.0, 10));
    EXPECT_GE(error, 0.5 * std::pow(2.0, 11) / std::tgamma(12.0));
}

TEST(PeanoBaker, LargeExponentNeedsHigherOrder)
{
    Rng rng(46);
    for (int k = 0; k < 20; ++k) {
        const WpModel m = build_wp_model(random_design(rng));
        SmoothScalar y = random_smooth_scalar(rng);
        const double t = uniform(rng, 0.5, 3.0);
        const double x = std::abs(y.integral(t)) * 2.0;
        if (x > 4.0) y.scale(4.0 / x);
        const double lambda = y.integral(t);
        const Mat2 exact = expm(m.A_w, lambda);
        EXPECT_LE(max_abs(peano_baker(m.A_w, y, t, 30).transition - exact), 1e-7);
        EXPECT_LE(max_abs(peano_baker(m.A_w, y, t, 12).transition - exact),
                  rotation_tail(2.0 * std::abs(lambda), 12) + 1e-9);
    }
}

TEST(PeanoBaker, ReportsNonConvergence)
{
    const Mat2 a = 2.0 * rotation_generator();
    const PeanoBakerResult r = peano_baker(a, [](double) { return 1.0; }, 2.0, 3);
    EXPECT_FALSE(r.converged);
    EXPECT_GT(r.residual, 1.0);
    EXPECT_TRUE(peano_baker(a, [](double) { return 1.0; }, 0.1, 12).converged);
    EXPECT_THROW(peano_baker(a, [](double) { return 1.0; }, 1.0, 0), NumericalError);
}

TEST(PeanoBaker, SeededCollapseSuite)
{
    const SuiteResult r = peano_baker_check(0);
    EXPECT_TRUE(r.passed) << r.max_residual;
}

TEST(NestedIntegral, ConstantOne)
{
    for (int j = 0; j <= 5; ++j)
        EXPECT_NEAR(nested_integral([](double) { return 1.0; }, 2.0, j), std::pow(2.0, j + 1) / std::tgamma(j + 2.0),
                    1e-12);
    EXPECT_THROW(nested_integral([](double) { return 1.0; }, 1.0, -1), NumericalError);
}

TEST(NestedIntegral, PowerIdentityOnYo)
{
    const ObserverDesign d = sigma1_observer();
    const Vec3 x0(1.0, 0.3, -0.4);
    const ScalarFunction y = [&](double s) { return yo_coefficients(d, s) * x0; };
    const double lambda = yo_integral(d, x0(0), x0.tail<2>(), 3.0);
    for (int j = 0; j <= 5; ++j)
        EXPECT_NEAR(nested_integral(y, 3.0, j), std::pow(lambda, j + 1) / std::tgamma(j + 2.0), 1e-7) << j;
}

TEST(NestedIntegral, SeededSuite)
{
    const SuiteResult r = nested_integral_check(0);
    EXPECT_TRUE(r.passed) << r.max_residual;
}

TEST(WpClosedForm, IdentityAtZero)
{
    const WpModel m = build_wp_model(sigma1_observer());
    const Vec2 w0(0.6, -0.8);
    EXPECT_LE(max_abs(evaluate_classical(wp_closed_form(m, 0.0), Vec3(1, 0.5, 0.2), w0) - w0), 1e-16);
}

TEST(WpClosedForm, ExponentLayouts)
{
    Rng rng(47);
    for (int k = 0; k < 20; ++k) {
        const WpModel m = build_wp_model(random_design(rng));
        const double t = uniform(rng, 0.0, 10.0);
        const WpRecipe r = wp_closed_form(m, t);
        const Vec3 x0 = random_cube3(rng);
        const Mat2 via_lambda = expm(r.A_w, r.lambda * x0);
        const Mat2 via_printed = expm(r.theta_block, r.printed_scalar * x0);
        EXPECT_LE(max_abs(via_lambda - via_printed), 1e-13);
    }
}

TEST(WpClosedForm, RotationByTwiceLambda)
{
    const WpModel m = build_wp_model(sigma1_observer());
    const Vec3 x0(1.0, 0.2, -0.3);
    const Vec2 w0(1.0, 0.0);
    for (double t = 0.0; t <= 5.0; t += 0.5) {
        const double angle = 2.0 * yo_integral_coefficients(m.design, t).dot(x0.transpose());
        EXPECT_LE(max_abs(evaluate_classical(wp_closed_form(m, t), x0, w0) - Vec2(std::cos(angle), std::sin(angle))),
                  1e-13);
    }
}

TEST(WpClosedForm, WorkedExampleAtPiMatchesRk4)
{
    const WpModel m = build_wp_model(sigma1_observer());
    const Vec3 x0(1.0, 0.0, 0.0);
    const Vec2 w0(0.6, 0.8);
    const TimeGrid g = TimeGrid::with_steps(0.0, pi, 4000);
    const StateTrace rk = classical_wp_oracle(m, x0, w0, g);
    const Vec2 closed = evaluate_classical(wp_closed_form(m, pi), x0, w0);
    EXPECT_LE(max_abs(closed - Vec2(rk.states.back())), 1e-7);
    // Lambda(pi) = -pi, so the rotation angle is -2 pi.
    EXPECT_LE(max_abs(closed - w0), 1e-12);
}

TEST(WpClosedForm, ClassicalLimitMatchesRk4Property)
{
    Rng rng(48);
    for (int k = 0; k < 10; ++k) {
        const ObserverDesign d = random_design(rng);
        const Vec3 x0 = random_cube3(rng);
        const Vec2 w0 = random_unit3(rng).head<2>();
        const SuiteResult r = classical_wp_check(d, x0, w0, TimeGrid::with_steps(0.0, 10.0, 10000));
        EXPECT_TRUE(r.passed) << r.max_residual;
    }
}

TEST(WpClosedForm, NormPreservedProperty)
{
    Rng rng(49);
    for (int k = 0; k < 50; ++k) {
        const WpModel m = build_wp_model(random_design(rng));
        const Vec3 x0 = random_cube3(rng);
        const Vec2 w0(uniform(rng, -1, 1), uniform(rng, -1, 1));
        for (double t = 0.0; t <= 50.0; t += 2.5)
            EXPECT_NEAR(evaluate_classical(wp_closed_form(m, t), x0, w0).norm(), w0.norm(), 1e-9);
    }
}

TEST(ClassicalWpTrace, Columns)
{
    const WpModel m = build_wp_model(sigma1_observer());
    const Trace tr = classical_wp_trace(m, Vec3(1, 0, 0), Vec2(1, 0), TimeGrid::uniform(0.0, 1.0, 0.25));
    EXPECT_EQ(tr.labels, (std::vector<std::string>{"lambda", "w1", "w2"}));
    EXPECT_NEAR(tr.column("lambda")[4], -1.0 + std::sin(2.0) / 2.0, 1e-14);
}
