#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "dcqo/sampling.hpp"
#include "dcqo/spin_algebra.hpp"

using namespace dcqo;

TEST(Theta, UnitVectorE1)
{
    Mat3 expected;
    expected << 0, 0, 0, 0, 0, 1, 0, -1, 0;
    EXPECT_EQ(theta(Vec3(1, 0, 0)), expected);
}

TEST(Theta, ZeroVector) { EXPECT_EQ(theta(Vec3::Zero()), Mat3::Zero()); }

TEST(Theta, GeneralVector)
{
    Mat3 expected;
    expected << 0, 3, -2, -3, 0, 1, 2, -1, 0;
    EXPECT_EQ(theta(Vec3(1, 2, 3)), expected);
}

TEST(Theta, ActsAsCrossProductWithArgumentOnTheRight)
{
    Rng rng(11);
    for (int k = 0; k < 100; ++k) {
        const Vec3 b = random_cube3(rng), x = random_cube3(rng);
        EXPECT_LE(max_abs(theta(b) * x - x.cross(b)), 1e-15);
    }
}

TEST(ThetaIdentities, OrthogonalUnitPair)
{
    EXPECT_LE(check_theta_identities(Vec3(1, 0, 0), Vec3(0, 1, 0)).max(), 1e-14);
}

TEST(ThetaIdentities, SelfAnnihilationIsExact)
{
    const Vec3 b(0.6, 0.8, 0.0);
    EXPECT_EQ(check_theta_identities(b, b).self_annihilation, 0.0);
}

TEST(ThetaIdentities, RandomPairsProperty)
{
    Rng rng(0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) worst = std::max(worst, check_theta_identities(random_cube3(rng), random_cube3(rng)).max());
    EXPECT_LE(worst, 1e-12);
}

TEST(ThetaIdentities, SkewSymmetryAndKernelProperty)
{
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 b = random_cube3(rng);
        const Mat3 t = theta(b);
        EXPECT_EQ(max_abs(t + t.transpose()), 0.0);
        EXPECT_LE(max_abs(t * b), 1e-16);
    }
}

TEST(ThetaIdentities, MaxPicksLargestResidual)
{
    ThetaResiduals r;
    r.product = 0.5;
    r.composition = 0.25;
    EXPECT_EQ(r.max(), 0.5);
}

TEST(PlantDrift, ZeroForDriftFreePlant) { EXPECT_EQ(plant_drift(Vec3::Zero()), Mat3::Zero()); }

TEST(PlantDrift, E3)
{
    Mat3 expected;
    expected << 0, -2, 0, 2, 0, 0, 0, 0, 0;
    EXPECT_EQ(plant_drift(Vec3(0, 0, 1)), expected);
}

TEST(PlantDrift, SkewWithSpectrumZeroAndPlusMinusTwoNorm)
{
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
        const Vec3 r = random_cube3(rng);
        const Mat3 a = plant_drift(r);
        EXPECT_EQ(max_abs(a + a.transpose()), 0.0);
        Eigen::EigenSolver<Mat3> es(a);
        std::vector<double> imag;
        for (int i = 0; i < 3; ++i) {
            EXPECT_LE(std::abs(es.eigenvalues()(i).real()), 1e-12);
            imag.push_back(es.eigenvalues()(i).imag());
        }
        std::sort(imag.begin(), imag.end());
        EXPECT_NEAR(imag[0], -2.0 * r.norm(), 1e-12);
        EXPECT_NEAR(imag[1], 0.0, 1e-12);
        EXPECT_NEAR(imag[2], 2.0 * r.norm(), 1e-12);
    }
}

TEST(SpinPlant, DriftUsesR_p)
{
    SpinPlant p;
    p.r_p = Vec3(0.1, -0.2, 0.3);
    EXPECT_EQ(p.drift(), plant_drift(p.r_p));
}

TEST(Pauli, HermitianInvolutoryTraceless)
{
    const PauliMatrices s = pauli();
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(max_abs(s[i] - s[i].adjoint()), 0.0);
        EXPECT_EQ(max_abs(s[i] * s[i] - Mat2c::Identity()), 0.0);
        EXPECT_EQ(std::abs(s[i].trace()), 0.0);
    }
}

TEST(Pauli, CommutatorsExact)
{
    const Complex I(0.0, 1.0);
    const PauliMatrices s = pauli();
    EXPECT_EQ(max_abs(commutator(s[0], s[1]) - 2.0 * I * s[2]), 0.0);
    EXPECT_EQ(max_abs(commutator(s[1], s[2]) - 2.0 * I * s[0]), 0.0);
    EXPECT_EQ(max_abs(commutator(s[2], s[0]) - 2.0 * I * s[1]), 0.0);
}

TEST(PauliProductTable, Sigma1Sigma2)
{
    const auto table = pauli_product_table();
    const PauliProduct& p = table[0][1];
    EXPECT_EQ(p.delta, 0.0);
    EXPECT_EQ(p.coefficients(0), Complex(0.0));
    EXPECT_EQ(p.coefficients(1), Complex(0.0));
    EXPECT_EQ(p.coefficients(2), Complex(0.0, 1.0));
}

TEST(PauliProductTable, DiagonalEntries)
{
    const auto table = pauli_product_table();
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(table[i][i].delta, 1.0);
        EXPECT_EQ(table[i][i].coefficients.norm(), 0.0);
    }
}

TEST(PauliProductTable, MatchesBruteForceProducts)
{
    const auto table = pauli_product_table();
    const PauliMatrices s = pauli();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(max_abs(Mat2c(s[i] * s[j]) - expand(table[i][j])), 0.0) << i << j;
}

TEST(LeviCivita, Values)
{
    static_assert(levi_civita(0, 1, 2) == 1);
    static_assert(levi_civita(1, 2, 0) == 1);
    static_assert(levi_civita(2, 1, 0) == -1);
    static_assert(levi_civita(0, 0, 2) == 0);
    SUCCEED();
}
