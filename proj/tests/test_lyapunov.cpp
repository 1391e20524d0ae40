#include <gtest/gtest.h>

#include <random>

#include "freqperf/lyapunov.hpp"
#include "oracles.hpp"

using namespace freqperf;

TEST(Lyapunov, RandomStableMatchesKronecker) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd A = oracle::random_stable(8, rng);
    Eigen::MatrixXd C = Eigen::MatrixXd::Random(3, 8);
    const Eigen::MatrixXd Q = C.transpose() * C;
    const Eigen::MatrixXd X = solve_lyapunov(A, Q);
    EXPECT_LE(gramian_residual(X, A, C), 1e-8);
    const Eigen::MatrixXd ref = oracle::lyapunov_kron(A, Q);
    EXPECT_LT((X - ref).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    EXPECT_LT((X - X.transpose()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, X.cwiseAbs().maxCoeff()));
  }
}

TEST(Lyapunov, ComplexPairsUseTwoByTwoBlocks) {
  Eigen::MatrixXd A(4, 4);
  A << -1.0, 5.0, 0.0, 0.0,
       -5.0, -1.0, 1.0, 0.0,
        0.0, 0.0, -0.2, 3.0,
        0.0, 0.0, -3.0, -0.2;
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd X = solve_lyapunov(A, Q);
  EXPECT_LT((X - oracle::lyapunov_kron(A, Q)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lyapunov, ScalarClosedForm) {
  Eigen::MatrixXd A(1, 1), Q(1, 1);
  A << -2.0;
  Q << 3.0;
  EXPECT_NEAR(solve_lyapunov(A, Q)(0, 0), 0.75, 1e-15);
}

TEST(Lyapunov, BadlyScaledSystemStaysAccurate) {
  Eigen::MatrixXd A(3, 3);
  A << -1e6, 1e6, 0.0,
       0.0, -1.0, 1e-3,
       0.0, 0.0, -1e-3;
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd X = solve_lyapunov(A, Q);
  const Eigen::MatrixXd ref = oracle::lyapunov_kron(A, Q);
  EXPECT_LT(((X - ref).array() / ref.array().abs().max(1e-300)).abs().maxCoeff(), 1e-8);
}

TEST(Lyapunov, BalancingScaleIsPowersOfTwo) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 1e6, 1e-6, -1.0;
  const Eigen::VectorXd s = balancing_scale(A);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    int e = 0;
    EXPECT_DOUBLE_EQ(std::frexp(s[i], &e), 0.5);
  }
  const Eigen::MatrixXd Ab = s.cwiseInverse().asDiagonal() * A * s.asDiagonal();
  EXPECT_LT(std::abs(Ab(0, 1)) / std::abs(Ab(1, 0)), 1e3);
}

TEST(Lyapunov, Errors) {
  Eigen::MatrixXd A(2, 2);
  A << 0.1, 0.0, 0.0, -1.0;
  EXPECT_THROW(solve_lyapunov(A, Eigen::MatrixXd::Identity(2, 2)), StabilityError);
  EXPECT_THROW(solve_lyapunov(Eigen::MatrixXd::Identity(2, 3), Eigen::MatrixXd::Identity(2, 2)), DimensionError);
  EXPECT_THROW(solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)), DimensionError);
  Eigen::MatrixXd Q(2, 2);
  Q << 1.0, 2.0, 0.0, 1.0;
  EXPECT_THROW(solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), Q), ValidationError);
  // Marginal modes are not Hurwitz either.
  EXPECT_THROW(solve_lyapunov(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)), StabilityError);
}
