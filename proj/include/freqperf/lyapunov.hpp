#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "freqperf/errors.hpp"

namespace freqperf {

struct LyapunovOptions {
  /// Diagonal similarity scaling (powers of two) before the Schur step.
  /// Needed for stiff models such as very small inertia.
  bool balance = true;
  /// Accepted max-entry residual, relative to max(1, max|Q|).
  double tolerance = 1e-8;
};

/// Diagonal scaling D (powers of two) such that D^-1 A D has comparable row
/// and column norms. Parlett-Reinsch iteration without permutations.
inline Eigen::VectorXd balancing_scale(const Eigen::MatrixXd& A) {
  constexpr double radix = 2.0;
  constexpr double radix_sq = radix * radix;
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd work = A;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = work.col(i).cwiseAbs().sum() - std::abs(work(i, i));
      double r = work.row(i).cwiseAbs().sum() - std::abs(work(i, i));
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / radix;
      while (c < g) {
        f *= radix;
        c *= radix_sq;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix_sq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        scale[i] *= f;
        work.row(i) /= f;
        work.col(i) *= f;
      }
    }
  }
  return scale;
}

/// max |X A + A' X + C' C|.
inline double gramian_residual(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& C) {
  if (A.rows() != A.cols() || X.rows() != A.rows() || X.cols() != A.cols() ||
      C.cols() != A.cols()) {
    throw DimensionError("gramian_residual: nonconformable X, A, C");
  }
  if (A.size() == 0) return 0.0;
  return (X * A + A.transpose() * X + C.transpose() * C).cwiseAbs().maxCoeff();
}

namespace detail {

/// Starting indices of the 1x1 / 2x2 diagonal blocks of a real Schur form.
inline std::vector<Eigen::Index> schur_block_starts(const Eigen::MatrixXd& T) {
  std::vector<Eigen::Index> starts;
  const Eigen::Index n = T.rows();
  for (Eigen::Index i = 0; i < n;) {
    starts.push_back(i);
    i += (i + 1 < n && T(i + 1, i) != 0.0) ? 2 : 1;
  }
  starts.push_back(n);
  return starts;
}

inline double schur_max_real_part(const Eigen::MatrixXd& T, const std::vector<Eigen::Index>& starts) {
  double lead = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b + 1 < starts.size(); ++b) {
    const Eigen::Index i = starts[b];
    const Eigen::Index s = starts[b + 1] - i;
    const double re = s == 1 ? T(i, i) : 0.5 * (T(i, i) + T(i + 1, i + 1));
    lead = std::max(lead, re);
  }
  return lead;
}

/// Solves X A + A' X + Q = 0 without balancing or residual checks.
inline Eigen::MatrixXd bartels_stewart(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  Eigen::RealSchur<Eigen::MatrixXd> schur(A, true);
  if (schur.info() != Eigen::Success) throw ConvergenceError("real Schur decomposition failed");
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd& U = schur.matrixU();
  const auto starts = schur_block_starts(T);

  const double norm_a = A.cwiseAbs().maxCoeff();
  const double lead = schur_max_real_part(T, starts);
  if (!(lead < -1e-13 * std::max(1.0, norm_a))) {
    throw StabilityError("Lyapunov solve needs a Hurwitz matrix (max Re eig = " +
                         std::to_string(lead) + ")");
  }

  // With Y = U' X U the equation becomes T' Y + Y T = -U' Q U, solved one
  // diagonal block pair at a time in increasing (column, row) order.
  const Eigen::MatrixXd F = U.transpose() * Q * U;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);
  const std::size_t nb = starts.size() - 1;
  for (std::size_t qb = 0; qb < nb; ++qb) {
    const Eigen::Index q0 = starts[qb];
    const Eigen::Index sq = starts[qb + 1] - q0;
    for (std::size_t pb = 0; pb < nb; ++pb) {
      const Eigen::Index p0 = starts[pb];
      const Eigen::Index sp = starts[pb + 1] - p0;
      Eigen::MatrixXd rhs = -F.block(p0, q0, sp, sq);
      if (p0 > 0) {
        rhs.noalias() -= T.block(0, p0, p0, sp).transpose() * Y.block(0, q0, p0, sq);
      }
      if (q0 > 0) {
        rhs.noalias() -= Y.block(p0, 0, sp, q0) * T.block(0, q0, q0, sq);
      }
      const Eigen::MatrixXd Tpp = T.block(p0, p0, sp, sp);
      const Eigen::MatrixXd Tqq = T.block(q0, q0, sq, sq);
      if (sp == 1 && sq == 1) {
        Y(p0, q0) = rhs(0, 0) / (Tpp(0, 0) + Tqq(0, 0));
        continue;
      }
      // vec(T_pp' Y + Y T_qq) = (I kron T_pp' + T_qq' kron I) vec(Y)
      const Eigen::Index dim = sp * sq;
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
      for (Eigen::Index j = 0; j < sq; ++j) {
        K.block(j * sp, j * sp, sp, sp) += Tpp.transpose();
        for (Eigen::Index l = 0; l < sq; ++l) {
          K.block(j * sp, l * sp, sp, sp).diagonal().array() += Tqq(l, j);
        }
      }
      const Eigen::VectorXd sol =
          K.fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), dim));
      Y.block(p0, q0, sp, sq) = Eigen::Map<const Eigen::MatrixXd>(sol.data(), sp, sq);
    }
  }
  Eigen::MatrixXd X = U * Y * U.transpose();
  return 0.5 * (X + X.transpose());
}

}  // namespace detail

/// Symmetric solution of X A + A' X + Q = 0 for Hurwitz A and symmetric Q.
/// Real Schur reduction followed by block back-substitution.
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                      const LyapunovOptions& opts = {}) {
  if (A.rows() != A.cols()) throw DimensionError("solve_lyapunov: A must be square");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionError("solve_lyapunov: Q must match A");
  }
  if (A.size() == 0) return Eigen::MatrixXd(0, 0);
  const double q_norm = Q.cwiseAbs().maxCoeff();
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, q_norm)) {
    throw ValidationError("solve_lyapunov: Q must be symmetric");
  }

  Eigen::MatrixXd X;
  if (opts.balance) {
    const Eigen::VectorXd s = balancing_scale(A);
    const Eigen::VectorXd s_inv = s.cwiseInverse();
    // X A + A'X + Q = 0  <=>  (D X D)(D^-1 A D) + (D A' D^-1)(D X D) + D Q D = 0
    const Eigen::MatrixXd A_bal = s_inv.asDiagonal() * A * s.asDiagonal();
    const Eigen::MatrixXd Q_bal = s.asDiagonal() * Q * s.asDiagonal();
    X = s_inv.asDiagonal() * detail::bartels_stewart(A_bal, Q_bal) * s_inv.asDiagonal();
  } else {
    X = detail::bartels_stewart(A, Q);
  }

  const double residual = (X * A + A.transpose() * X + Q).cwiseAbs().maxCoeff();
  if (!(residual <= opts.tolerance * std::max(1.0, q_norm))) {
    throw ConvergenceError("Lyapunov residual " + std::to_string(residual) +
                           " exceeds tolerance");
  }
  return X;
}

}  // namespace freqperf
