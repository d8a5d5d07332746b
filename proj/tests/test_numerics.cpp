#include "pathvi/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support/jacobi_svd.hpp"

namespace {

using pathvi::numerics::Matrix;
using pathvi::numerics::Rng;
using pathvi::numerics::Vector;

Matrix random_matrix(int n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

TEST(SmallestSingularPair, DiagonalReadOff) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.0;
  m(1, 1) = 5.0;
  const auto t = pathvi::numerics::smallest_singular_pair(m);
  EXPECT_DOUBLE_EQ(t.sigma_min, 0.0);
  EXPECT_DOUBLE_EQ(t.sigma_second, 5.0);
  EXPECT_NEAR(std::abs(t.v_min[0]), 1.0, 1e-12);
  EXPECT_NEAR(t.v_min[1], 0.0, 1e-12);
}

TEST(SmallestSingularPair, IdentityIsDegenerate) {
  const auto t = pathvi::numerics::smallest_singular_pair(Matrix::Identity(3, 3));
  EXPECT_NEAR(t.sigma_min, 1.0, 1e-12);
  EXPECT_NEAR(t.sigma_second, 1.0, 1e-12);
  EXPECT_NEAR(t.v_min.norm(), 1.0, 1e-12);
  EXPECT_TRUE(t.degenerate);
}

TEST(SmallestSingularPair, MatchesJacobiOracleOnSeededMatrix) {
  const Matrix m = random_matrix(5, 42);
  const auto t = pathvi::numerics::smallest_singular_pair(m);
  const auto ref = testsupport::one_sided_jacobi_svd(m);
  EXPECT_NEAR(t.sigma_min, ref.singular_values[4], 1e-10);
  EXPECT_NEAR(t.sigma_second, ref.singular_values[3], 1e-10);
  // v_min matches the oracle's minimizing column up to sign.
  const double align = std::abs(t.v_min.dot(ref.v.col(4)));
  EXPECT_NEAR(align, 1.0, 1e-8);
}

TEST(SmallestSingularPair, ResidualIdentityOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int n = 2 + static_cast<int>(seed % 19);
    const Matrix m = random_matrix(n, 1000 + seed);
    const auto t = pathvi::numerics::smallest_singular_pair(m);
    const double mn = pathvi::numerics::operator_norm(m);
    EXPECT_LE(t.sigma_min, t.sigma_second + 1e-15);
    EXPECT_LE(t.sigma_second, mn + 1e-12 * (1.0 + mn));
    EXPECT_NEAR((m * t.v_min).norm(), t.sigma_min, 1e-10 * (1.0 + mn));
    EXPECT_NEAR(t.v_min.norm(), 1.0, 1e-12);
  }
}

TEST(SmallestSingularPair, RejectsNonFinite) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(pathvi::numerics::smallest_singular_pair(m),
               pathvi::InvalidInputError);
  EXPECT_THROW(pathvi::numerics::operator_norm(m), pathvi::InvalidInputError);
}

TEST(OperatorNorm, KnownValues) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = -7.0;
  EXPECT_DOUBLE_EQ(pathvi::numerics::operator_norm(m), 7.0);
  EXPECT_DOUBLE_EQ(pathvi::numerics::operator_norm(Matrix::Zero(3, 3)), 0.0);
}

TEST(OperatorNorm, MatchesJacobiOracle) {
  const Matrix m = random_matrix(6, 7);
  const auto ref = testsupport::one_sided_jacobi_svd(m);
  EXPECT_NEAR(pathvi::numerics::operator_norm(m), ref.singular_values[0],
              1e-10 * (1.0 + ref.singular_values[0]));
}

TEST(SampleGaussianLinear, DeterministicAndZeroVariance) {
  const auto [a1, b1] = pathvi::numerics::sample_gaussian_linear(8, 0.3, 99);
  const auto [a2, b2] = pathvi::numerics::sample_gaussian_linear(8, 0.3, 99);
  EXPECT_TRUE(a1 == a2);
  EXPECT_TRUE(b1 == b2);

  const auto [az, bz] = pathvi::numerics::sample_gaussian_linear(4, 0.0, 1);
  EXPECT_TRUE(az.isZero(0.0));
  EXPECT_TRUE(bz.isZero(0.0));

  EXPECT_THROW(pathvi::numerics::sample_gaussian_linear(4, -1.0, 1),
               pathvi::InvalidInputError);
}

TEST(SampleGaussianLinear, MomentsMatchOverMillionEntries) {
  // n=1000 gives 10^6 matrix entries; variance sigma^2/n with sigma = 1.
  const int n = 1000;
  const double variance = 1.0 / n;
  const auto [a, b] = pathvi::numerics::sample_gaussian_linear(n, variance, 2024);
  const double count = static_cast<double>(n) * n;
  const double mean = a.sum() / count;
  const double var = (a.array() - mean).square().sum() / count;
  EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(variance / count));
  EXPECT_NEAR(var, variance, 0.02 * variance);
  EXPECT_EQ(b.size(), n);
}

TEST(Rng, UniformBallStaysInside) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LE(rng.uniform_ball(4).norm(), 1.0 + 1e-15);
  }
}

}  // namespace
