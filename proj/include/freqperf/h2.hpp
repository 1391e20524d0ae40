#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "freqperf/errors.hpp"
#include "freqperf/graph.hpp"
#include "freqperf/lyapunov.hpp"
#include "freqperf/parameters.hpp"
#include "freqperf/state_space.hpp"

namespace freqperf {

enum class H2Method { lyapunov, analytic, monte_carlo, upper_bound };

inline const char* to_string(H2Method m) {
  switch (m) {
    case H2Method::lyapunov: return "lyapunov";
    case H2Method::analytic: return "analytic";
    case H2Method::monte_carlo: return "monte_carlo";
    case H2Method::upper_bound: return "upper_bound";
  }
  return "?";
}

struct H2Diagnostics {
  double residual = 0.0;            ///< max|X A + A'X + C'C| in model coordinates
  double relative_residual = 0.0;   ///< residual / max|C'C|
  double max_real_eigenvalue = 0.0; ///< stability margin of A
  double gramian_condition = std::numeric_limits<double>::infinity();
  bool observable = false;          ///< Gramian positive definite
};

/// Squared H2 norm with provenance.
struct H2Result {
  double value = 0.0;
  H2Method method = H2Method::lyapunov;
  H2Diagnostics diagnostics;
};

/// Tr(B' X B) with X the observability Gramian. The Lyapunov equation is
/// solved in balanced coordinates and the trace is taken there, which keeps
/// stiff models (tiny inertia, large gains) accurate.
inline H2Result h2_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.cols()) {
    throw DimensionError("h2_norm: nonconformable A, B, C");
  }
  H2Result out;
  if (A.rows() == 0) return out;

  const Eigen::VectorXd s = balancing_scale(A);
  const Eigen::VectorXd s_inv = s.cwiseInverse();
  const Eigen::MatrixXd A_bal = s_inv.asDiagonal() * A * s.asDiagonal();
  const Eigen::MatrixXd B_bal = s_inv.asDiagonal() * B;
  const Eigen::MatrixXd C_bal = C * s.asDiagonal();
  const Eigen::MatrixXd X_bal =
      solve_lyapunov(A_bal, C_bal.transpose() * C_bal, LyapunovOptions{.balance = false});

  out.value = std::max(0.0, (B_bal.transpose() * X_bal * B_bal).trace());

  const Eigen::MatrixXd X = s_inv.asDiagonal() * X_bal * s_inv.asDiagonal();
  auto& diag = out.diagnostics;
  diag.residual = gramian_residual(X, A, C);
  const double q_norm = C.size() == 0 ? 0.0 : (C.transpose() * C).cwiseAbs().maxCoeff();
  diag.relative_residual = q_norm > 0.0 ? diag.residual / q_norm : diag.residual;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  diag.max_real_eigenvalue = es.eigenvalues().real().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> xs(X_bal, Eigen::EigenvaluesOnly);
  const double lo = xs.eigenvalues().minCoeff();
  const double hi = xs.eigenvalues().maxCoeff();
  diag.observable = hi > 0.0 && lo > 1e-10 * hi;
  if (diag.observable) diag.gramian_condition = hi / lo;
  return out;
}

inline H2Result h2_norm(const StateSpaceModel& model) {
  return h2_norm(model.A(), model.B(), model.C());
}

/// Explicit Gramian of the broadcast loop under uniform parameters.
struct BroadcastGramian {
  double z = 0.0;
  double beta = 0.0;
  Eigen::MatrixXd X;  ///< ordered like assemble_broadcast's state (phi, omega, mu)
};

inline BroadcastGramian closed_form_broadcast_gramian(const NetworkGraph& g,
                                                      const GridParameters& params) {
  const int n = g.num_nodes();
  params.validate(n);
  if (!params.is_uniform()) {
    throw AssumptionError("closed-form broadcast Gramian needs uniform m, d, b, k and r = 1/n");
  }
  const double m = params.m[0], d = params.d[0], k = params.k[0];
  BroadcastGramian out;
  out.z = m * m / (2.0 * n * d * params.tau_mu);
  out.beta = n * params.tau_mu * (d / 2.0 + out.z * (n / k) / m);

  const Eigen::Index np = n - 1, iw = np, imu = np + n;
  out.X = Eigen::MatrixXd::Zero(np + n + 1, np + n + 1);
  out.X.block(iw, iw, n, n).setConstant(out.z);
  out.X.block(iw, imu, n, 1).setConstant(m / 2.0);
  out.X.block(imu, iw, 1, n).setConstant(m / 2.0);
  out.X(imu, imu) = out.beta;
  return out;
}

struct GeneralizedGramianCheck {
  double max_eigenvalue = 0.0;  ///< of X A + A'X + C'C, must be <= 0 up to tolerance
  double bound = 0.0;           ///< Tr(B' X B), an upper bound on the squared H2 norm
  Eigen::MatrixXd X;
};

/// Checks the block-diagonal storage matrix
///   X = 1/2 blkdiag(alpha G, alpha m I, tau_mu I, tau_nu I)
/// against the primal-dual model (G is the phase metric of the model's
/// coordinates, identity for tree coordinates).
inline GeneralizedGramianCheck verify_generalized_gramian(const StateSpaceModel& model,
                                                          const GridParameters& params,
                                                          double tolerance = 1e-9) {
  if (model.controller() != ControllerTag::primal_dual) {
    throw ValidationError("generalized Gramian applies to the primal-dual model only");
  }
  if (!(params.alpha > 0.0)) throw ParameterError("generalized Gramian needs alpha > 0");
  if (!params.is_uniform()) {
    throw AssumptionError("generalized Gramian needs uniform parameters");
  }
  const auto phase = model.block(BlockKind::phase);
  const auto freq = model.block(BlockKind::frequency);
  const auto mult = model.block(BlockKind::multiplier);
  const auto edge = model.block(BlockKind::edge_multiplier);
  if (!phase || !freq || !mult || !edge || freq->size != params.size()) {
    throw DimensionError("model does not match the primal-dual block layout");
  }
  const double a = params.alpha, m = params.m[0];

  GeneralizedGramianCheck out;
  out.X = Eigen::MatrixXd::Zero(model.num_states(), model.num_states());
  out.X.block(phase->offset, phase->offset, phase->size, phase->size) =
      0.5 * a * model.deflation().phase_metric;
  out.X.block(freq->offset, freq->offset, freq->size, freq->size).diagonal().setConstant(0.5 * a * m);
  out.X.block(mult->offset, mult->offset, mult->size, mult->size)
      .diagonal()
      .setConstant(0.5 * params.tau_mu);
  out.X.block(edge->offset, edge->offset, edge->size, edge->size)
      .diagonal()
      .setConstant(0.5 * params.tau_nu);

  const Eigen::MatrixXd& A = model.A();
  const Eigen::MatrixXd& C = model.C();
  Eigen::MatrixXd lmi = out.X * A + A.transpose() * out.X + C.transpose() * C;
  lmi = 0.5 * (lmi + lmi.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lmi, Eigen::EigenvaluesOnly);
  out.max_eigenvalue = es.eigenvalues().maxCoeff();
  out.bound = (model.B().transpose() * out.X * model.B()).trace();
  if (out.max_eigenvalue > tolerance) {
    throw VerificationError("generalized Gramian inequality violated (max eigenvalue " +
                            std::to_string(out.max_eigenvalue) + ")");
  }
  return out;
}

}  // namespace freqperf
