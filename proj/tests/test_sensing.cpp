#include <cmath>
#include <vector>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "qmap/sensing.hpp"

namespace {

using namespace qmap;

TEST(GenGaussian, DeterministicPerSeed) {
  const auto a = gen_gaussian(5, 7, Scale::unit, 42);
  const auto b = gen_gaussian(5, 7, Scale::unit, 42);
  const auto c = gen_gaussian(5, 7, Scale::unit, 43);
  EXPECT_EQ(a.a, b.a);
  EXPECT_NE(a.a, c.a);
  // rows are generated independently of the row count
  const auto tall = gen_gaussian(9, 7, Scale::unit, 42);
  EXPECT_EQ(Matrix(tall.a.topRows(5)), a.a);
}

TEST(GenGaussian, EntryVariance) {
  const auto u = gen_gaussian(200, 300, Scale::unit, 1);
  const auto v = gen_gaussian(200, 300, Scale::normalized, 1);
  const double N = 200.0 * 300.0;
  EXPECT_NEAR(u.a.squaredNorm() / N, 1.0, 0.02);
  EXPECT_NEAR(v.a.squaredNorm() / N, 1.0 / 300, 0.02 / 300);
  EXPECT_NEAR(u.a.sum() / N, 0.0, 0.02);
  // normalized columns have squared norm about m / n
  for (int c = 0; c < 5; ++c) EXPECT_NEAR(v.a.col(c).squaredNorm(), 200.0 / 300.0, 0.25);
}

TEST(GenGaussian, RejectsBadShape) {
  EXPECT_THROW(gen_gaussian(0, 3, Scale::unit, 1), InputError);
  EXPECT_THROW(gen_gaussian(3, 3, Scale::explicit_, 1), InputError);
  EXPECT_THROW(parse_scale("huge"), InputError);
  EXPECT_EQ(parse_scale(to_string(Scale::normalized)), Scale::normalized);
}

TEST(SigmaMax, Examples) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1, 4, 2;
  EXPECT_NEAR(sigma_max(SenseMatrix::from_matrix(d)), 4.0, 1e-6);
  Matrix ones = Matrix::Ones(2, 8);
  EXPECT_NEAR(sigma_max(SenseMatrix::from_matrix(ones)), 4.0, 1e-6);
  EXPECT_EQ(sigma_max(SenseMatrix::from_matrix(Matrix::Zero(2, 2))), 0.0);
}

TEST(SigmaMax, MatchesSvd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto A = gen_gaussian(20, 35, Scale::unit, seed);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A.a);
    EXPECT_NEAR(sigma_max(A, 1e-12), svd.singularValues()(0), 1e-5 * svd.singularValues()(0));
  }
}

TEST(SigmaMax, ConcentrationBound) {
  const int m = 40, n = 100, trials = 200;
  int below = 0;
  for (int t = 0; t < trials; ++t) {
    below += sigma_max(gen_gaussian(m, n, Scale::unit, 1000 + t)) < std::sqrt(double(n)) + 2 * std::sqrt(double(m));
  }
  EXPECT_GE(below, trials * 99 / 100);
}

TEST(Measure, LinearAndNoiseless) {
  const auto A = gen_gaussian(4, 6, Scale::unit, 3);
  const std::vector<double> x{1, 0, 0.5, 0, 0, 2}, z{0, 1, 0, 0, 3, 0};
  std::vector<double> sum(6);
  for (int i = 0; i < 6; ++i) sum[i] = 2 * x[i] - z[i];
  const Vector lhs = measure(A, sum, 0, 0);
  const Vector rhs = 2 * measure(A, x, 0, 0) - measure(A, z, 0, 0);
  EXPECT_LT((lhs - rhs).norm(), 1e-12);
  EXPECT_THROW(measure(A, std::vector<double>(5), 0, 0), InputError);
  EXPECT_THROW(measure(A, x, -1, 0), InputError);
}

TEST(Measure, NoiseLevel) {
  const auto A = SenseMatrix::from_matrix(Matrix::Zero(20000, 1));
  const std::vector<double> x{1.0};
  const Vector y = measure(A, x, 0.5, 9);
  EXPECT_NEAR(std::sqrt(y.squaredNorm() / y.size()), 0.5, 0.01);
  EXPECT_EQ(measure(A, x, 0.5, 9), y);
  EXPECT_NE(measure(A, x, 0.5, 10), y);
}

}  // namespace
