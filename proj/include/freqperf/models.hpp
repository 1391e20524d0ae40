#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freqperf/errors.hpp"
#include "freqperf/graph.hpp"
#include "freqperf/parameters.hpp"
#include "freqperf/state_space.hpp"

namespace freqperf {

/// Assembled models must satisfy max Re(eig(A)) < -kHurwitzMargin.
inline constexpr double kHurwitzMargin = 1e-9;

namespace detail {

/// Coordinates that replace theta (and, for primal-dual, the edge
/// multipliers) once the uniform-rotation direction is removed.
struct ReducedCoordinates {
  Eigen::MatrixXd from_theta;   ///< phi = from_theta * theta, (n-1) x n
  Eigen::MatrixXd coupling;     ///< L theta = coupling * phi, n x (n-1)
  Eigen::MatrixXd edge_factor;  ///< F with F F' = L, n x (n-1)
  DeflationRecord record;
};

inline ReducedCoordinates reduced_coordinates(const NetworkGraph& g) {
  const int n = g.num_nodes();
  ReducedCoordinates rc;
  rc.record.strategy = deflation_for(g);
  rc.record.angle_directions = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  rc.record.edge_directions.resize(g.num_edges(), 0);

  if (n == 1) {
    rc.from_theta.resize(0, 1);
    rc.coupling.resize(1, 0);
    rc.edge_factor.resize(1, 0);
    rc.record.phase_metric.resize(0, 0);
    return rc;
  }

  const Eigen::MatrixXd E = incidence(g);
  if (g.is_acyclic()) {
    rc.from_theta = E.transpose();
    rc.coupling = E;
    rc.edge_factor = E;
    rc.record.phase_metric = Eigen::MatrixXd::Identity(n - 1, n - 1);
    return rc;
  }

  // Eigenvectors of L for the nonzero eigenvalues form an orthonormal basis
  // of the complement of span{1}.
  const Eigen::MatrixXd L = laplacian(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const Eigen::MatrixXd Q = es.eigenvectors().rightCols(n - 1);
  rc.from_theta = Q.transpose();
  rc.coupling = L * Q;
  rc.record.phase_metric = Q.transpose() * L * Q;
  rc.record.phase_metric = 0.5 * (rc.record.phase_metric + rc.record.phase_metric.transpose()).eval();

  // Edge multipliers along the cycle space never reach mu; keep only the
  // row space of E.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
  const Eigen::MatrixXd V = svd.matrixV();
  const Eigen::MatrixXd W = V.leftCols(n - 1);
  rc.edge_factor = E * W;
  rc.record.edge_directions = V.rightCols(g.num_edges() - (n - 1));
  return rc;
}

inline void require_hurwitz(const StateSpaceModel& model) {
  const double lead = model.max_real_eigenvalue();
  if (!(lead < -kHurwitzMargin)) {
    throw StabilityError(std::string(to_string(model.controller())) +
                         " model is not Hurwitz after deflation (max Re eig = " +
                         std::to_string(lead) + ")");
  }
}

inline std::vector<StateBlock> tile(std::initializer_list<std::pair<BlockKind, Eigen::Index>> parts) {
  std::vector<StateBlock> out;
  Eigen::Index offset = 0;
  for (const auto& [kind, size] : parts) {
    out.push_back({kind, offset, size});
    offset += size;
  }
  return out;
}

}  // namespace detail

/// Swing dynamics without secondary control; the output is the frequency
/// vector.
inline StateSpaceModel assemble_swing(const NetworkGraph& g, const GridParameters& params) {
  const int n = g.num_nodes();
  params.validate(n);
  const auto rc = detail::reduced_coordinates(g);
  const Eigen::Index np = n - 1;
  const Eigen::VectorXd m_inv = params.m.cwiseInverse();

  const Eigen::Index nx = np + n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
  A.block(0, np, np, n) = rc.from_theta;
  A.block(np, 0, n, np) = (-m_inv).asDiagonal() * rc.coupling;
  A.block(np, np, n, n).diagonal() = -params.d.cwiseProduct(m_inv);

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, n);
  B.block(np, 0, n, n).diagonal() = params.b.cwiseProduct(m_inv);

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, nx);
  C.block(0, np, n, n).setIdentity();

  StateSpaceModel model(std::move(A), std::move(B), std::move(C), ControllerTag::swing,
                        detail::tile({{BlockKind::phase, np}, {BlockKind::frequency, n}}),
                        {{OutputKind::frequency, 0, n}}, rc.record);
  detail::require_hurwitz(model);
  return model;
}

/// Swing dynamics under a central integrator that averages frequencies with
/// weights r and broadcasts p = -mu K^-1 1. State (phi, omega, mu), output
/// K^{1/2} p = -K^{-1/2} 1 mu.
inline StateSpaceModel assemble_broadcast(const NetworkGraph& g, const GridParameters& params) {
  const int n = g.num_nodes();
  params.validate(n);
  const auto rc = detail::reduced_coordinates(g);
  const Eigen::Index np = n - 1;
  const Eigen::VectorXd m_inv = params.m.cwiseInverse();
  const Eigen::VectorXd k_inv = params.k.cwiseInverse();

  const Eigen::Index iw = np, imu = np + n, nx = np + n + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
  A.block(0, iw, np, n) = rc.from_theta;
  A.block(iw, 0, n, np) = (-m_inv).asDiagonal() * rc.coupling;
  A.block(iw, iw, n, n).diagonal() = -params.d.cwiseProduct(m_inv);
  A.block(iw, imu, n, 1) = -k_inv.cwiseProduct(m_inv);
  A.block(imu, iw, 1, n) = params.r.transpose() / params.tau_mu;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, n);
  B.block(iw, 0, n, n).diagonal() = params.b.cwiseProduct(m_inv);

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, nx);
  C.block(0, imu, n, 1) = -k_inv.cwiseSqrt();

  StateSpaceModel model(
      std::move(A), std::move(B), std::move(C), ControllerTag::broadcast,
      detail::tile({{BlockKind::phase, np}, {BlockKind::frequency, n}, {BlockKind::multiplier, 1}}),
      {{OutputKind::cost, 0, n}}, rc.record);
  detail::require_hurwitz(model);
  return model;
}

/// Primal-dual saddle-point controller with optional frequency feedback
/// alpha. State (phi, omega, mu, nu); the communication incidence equals the
/// electrical one. Disturbances enter both the swing equation and the mu
/// dynamics. Output K^{1/2} p = -K^{-1/2} mu.
inline StateSpaceModel assemble_primal_dual(const NetworkGraph& g, const GridParameters& params) {
  const int n = g.num_nodes();
  params.validate(n);
  const auto rc = detail::reduced_coordinates(g);
  const Eigen::Index np = n - 1;
  const Eigen::VectorXd m_inv = params.m.cwiseInverse();
  const Eigen::VectorXd k_inv = params.k.cwiseInverse();
  const Eigen::MatrixXd& Ec = rc.edge_factor;

  const Eigen::Index iw = np, imu = np + n, inu = np + 2 * n, nx = 2 * np + 2 * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
  A.block(0, iw, np, n) = rc.from_theta;
  A.block(iw, 0, n, np) = (-m_inv).asDiagonal() * rc.coupling;
  A.block(iw, iw, n, n).diagonal() = -params.d.cwiseProduct(m_inv);
  A.block(iw, imu, n, n).diagonal() = -k_inv.cwiseProduct(m_inv);
  A.block(imu, iw, n, n).diagonal() = (params.alpha / params.tau_mu) * k_inv;
  A.block(imu, imu, n, n).diagonal() = -k_inv / params.tau_mu;
  A.block(imu, inu, n, np) = -Ec / params.tau_mu;
  A.block(inu, imu, np, n) = Ec.transpose() / params.tau_nu;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, n);
  B.block(iw, 0, n, n).diagonal() = params.b.cwiseProduct(m_inv);
  B.block(imu, 0, n, n).diagonal() = params.b / params.tau_mu;

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, nx);
  C.block(0, imu, n, n).diagonal() = -k_inv.cwiseSqrt();

  StateSpaceModel model(std::move(A), std::move(B), std::move(C), ControllerTag::primal_dual,
                        detail::tile({{BlockKind::phase, np},
                                      {BlockKind::frequency, n},
                                      {BlockKind::multiplier, n},
                                      {BlockKind::edge_multiplier, np}}),
                        {{OutputKind::cost, 0, n}}, rc.record);
  detail::require_hurwitz(model);
  return model;
}

/// Distributed averaging PI control: tau K p' = -omega - gamma L K p.
/// State (phi, omega, p), output K^{1/2} p.
inline StateSpaceModel assemble_dapi(const NetworkGraph& g, const GridParameters& params) {
  const int n = g.num_nodes();
  params.validate(n);
  const auto rc = detail::reduced_coordinates(g);
  const Eigen::Index np = n - 1;
  const Eigen::VectorXd m_inv = params.m.cwiseInverse();
  const Eigen::VectorXd tk_inv = (params.tau * params.k).cwiseInverse();
  const Eigen::MatrixXd Lc = params.gamma * laplacian(g);

  const Eigen::Index iw = np, ip = np + n, nx = np + 2 * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
  A.block(0, iw, np, n) = rc.from_theta;
  A.block(iw, 0, n, np) = (-m_inv).asDiagonal() * rc.coupling;
  A.block(iw, iw, n, n).diagonal() = -params.d.cwiseProduct(m_inv);
  A.block(iw, ip, n, n).diagonal() = m_inv;
  A.block(ip, iw, n, n).diagonal() = -tk_inv;
  A.block(ip, ip, n, n) = (-tk_inv).asDiagonal() * Lc * params.k.asDiagonal();

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, n);
  B.block(iw, 0, n, n).diagonal() = params.b.cwiseProduct(m_inv);

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, nx);
  C.block(0, ip, n, n).diagonal() = params.k.cwiseSqrt();

  StateSpaceModel model(
      std::move(A), std::move(B), std::move(C), ControllerTag::dapi,
      detail::tile({{BlockKind::phase, np}, {BlockKind::frequency, n}, {BlockKind::reserve, n}}),
      {{OutputKind::cost, 0, n}}, rc.record);
  detail::require_hurwitz(model);
  return model;
}

/// Stacks sqrt(pi) * omega under the existing cost output. A and B are
/// untouched.
inline StateSpaceModel augment_frequency_penalty(const StateSpaceModel& model, double pi) {
  if (!(pi >= 0.0) || !std::isfinite(pi)) throw ParameterError("frequency penalty must be >= 0");
  const auto freq = model.block(BlockKind::frequency);
  if (!freq) throw ValidationError("model has no frequency block to penalize");
  if (model.output(OutputKind::frequency)) {
    throw ValidationError("model output already contains a frequency term");
  }

  const Eigen::Index base = model.num_outputs();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(base + freq->size, model.num_states());
  C.topRows(base) = model.C();
  C.block(base, freq->offset, freq->size, freq->size) =
      std::sqrt(pi) * Eigen::MatrixXd::Identity(freq->size, freq->size);

  auto outputs = model.outputs();
  outputs.push_back({OutputKind::frequency, base, freq->size});
  return model.with_output(std::move(C), std::move(outputs));
}

}  // namespace freqperf
