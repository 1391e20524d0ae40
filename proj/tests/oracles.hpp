#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the Schur-based solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace oracle {

/// Solves X A + A' X + Q = 0 through the n^2 x n^2 Kronecker system.
inline Eigen::MatrixXd lyapunov_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(X A) = (A' kron I) vec X, vec(A' X) = (I kron A') vec X
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += A(j, i) * I;
      if (i == j) K.block(i * n, j * n, n, n) += A.transpose();
    }
  }
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::VectorXd x = K.fullPivLu().solve(-q);
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

/// Squared H2 norm as Tr(C P C') with P the controllability Gramian,
/// the dual of the observability route used by the library.
inline double h2_controllability(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C) {
  const Eigen::MatrixXd P = lyapunov_kron(A.transpose(), B * B.transpose());
  return (C * P * C.transpose()).trace();
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = nd(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_stable(Eigen::Index n, std::mt19937_64& rng, double margin = 0.5) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = nd(rng);
  const double shift = Eigen::EigenSolver<Eigen::MatrixXd>(M).eigenvalues().real().maxCoeff() + margin;
  return M - shift * Eigen::MatrixXd::Identity(n, n);
}

/// 2 - 2 cos(k pi / n), k = 0..n-1: eigenvalues of the unit-weight path.
inline Eigen::VectorXd path_spectrum(int n) {
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) out[k] = 2.0 - 2.0 * std::cos(k * M_PI / n);
  std::sort(out.data(), out.data() + n);
  return out;
}

/// Distributed-averaging loop with uniform m, d, b, k decoupled along the
/// Laplacian eigenvectors. Each nonzero eigenvalue l contributes the 3-state
/// system (angle, frequency, reserve)
///   A = [0 1 0; -l/m -d/m 1/m; 0 -1/(tau k) -gamma l / tau],
///   B = [0; b/m; 0], C = [0 0 sqrt(k)],
/// and the zero eigenvalue the 2-state system without the angle.
inline double dapi_modal_sum(const Eigen::VectorXd& eig, double m, double d, double b, double k, double tau,
                             double gamma) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double l = eig[i];
    if (std::abs(l) < 1e-12) {
      Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2);
      A << -d / m, 1.0 / m, -1.0 / (tau * k), 0.0;
      B << b / m, 0.0;
      C << 0.0, std::sqrt(k);
      total += h2_controllability(A, B, C);
    } else {
      Eigen::MatrixXd A(3, 3), B(3, 1), C(1, 3);
      A << 0.0, 1.0, 0.0, -l / m, -d / m, 1.0 / m, 0.0, -1.0 / (tau * k), -gamma * l / tau;
      B << 0.0, b / m, 0.0;
      C << 0.0, 0.0, std::sqrt(k);
      total += h2_controllability(A, B, C);
    }
  }
  return total;
}

}  // namespace oracle
