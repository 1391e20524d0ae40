#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freqperf/errors.hpp"
#include "freqperf/parameters.hpp"

// Closed-form squared H2 norms for uniform parameters (equal m, d, b, k and
// r = 1/n). They double as oracles for the Lyapunov path.

namespace freqperf {

namespace detail {

inline void require_closed_form(const GridParameters& p, const char* what) {
  if (p.size() < 1) throw InvalidSizeError(std::string(what) + ": empty parameter set");
  if (!p.is_uniform() || !p.has_identical_costs()) {
    throw AssumptionError(std::string(what) +
                          " holds only for uniform m, d, b, k and r = 1/n");
  }
}

/// Validated Laplacian eigenvalues; tiny negative round-off is clamped to 0.
inline Eigen::VectorXd checked_eigenvalues(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) throw InvalidSizeError("empty Laplacian spectrum");
  Eigen::VectorXd lam = eigenvalues;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (!std::isfinite(lam[i]) || lam[i] < -1e-9) {
      throw ValidationError("Laplacian eigenvalue " + std::to_string(lam[i]) + " is negative");
    }
    lam[i] = std::max(0.0, lam[i]);
  }
  return lam;
}

}  // namespace detail

/// b^2 / (2 tau_mu d), independent of the network size.
inline double broadcast_h2(const GridParameters& params) {
  detail::require_closed_form(params, "broadcast formula");
  const double b = params.b[0];
  return b * b / (2.0 * params.tau_mu * params.d[0]);
}

/// (b^2 / 2 tau_mu) n for the feed-forward primal-dual loop (alpha = 0).
/// The value does not depend on tau_nu.
inline double pd_h2_exact_alpha0(const GridParameters& params) {
  detail::require_closed_form(params, "primal-dual alpha = 0 formula");
  const double b = params.b[0];
  return b * b / (2.0 * params.tau_mu) * params.size();
}

/// (b^2 / 2 tau_mu) n + b^2 alpha n / (2 m), valid for every alpha >= 0.
inline double pd_h2_upper_bound(const GridParameters& params) {
  detail::require_closed_form(params, "primal-dual bound");
  if (!(params.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
  const double b = params.b[0];
  const double n = params.size();
  return b * b / (2.0 * params.tau_mu) * n + b * b * params.alpha * n / (2.0 * params.m[0]);
}

/// Modal decomposition of the distributed-averaging norm.
struct DapiModalTerms {
  double z1 = 0.0;
  double z2 = 0.0;
  std::vector<double> terms;  ///< 1 / (z2 lambda^2 + z1 lambda + 1), one per eigenvalue
};

struct DapiH2 {
  double value = 0.0;
  DapiModalTerms modal;
};

/// (b^2 / 2 tau d) sum_i 1 / (z2 l_i^2 + z1 l_i + 1) with
/// z2 = m k gamma^2 / tau and z1 = m gamma / (d tau) + k d gamma + k tau.
/// gamma = 0 is accepted here (no averaging) even though the assembled
/// model then loses Hurwitz stability.
inline DapiH2 dapi_h2(const GridParameters& params, const Eigen::VectorXd& eigenvalues) {
  detail::require_closed_form(params, "distributed averaging formula");
  if (!(params.gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
  const Eigen::VectorXd lam = detail::checked_eigenvalues(eigenvalues);
  const double m = params.m[0], d = params.d[0], b = params.b[0], k = params.k[0];
  const double tau = params.tau, g = params.gamma;

  DapiH2 out;
  out.modal.z2 = m * k * g * g / tau;
  out.modal.z1 = m * g / (d * tau) + k * d * g + k * tau;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double term = 1.0 / (out.modal.z2 * lam[i] * lam[i] + out.modal.z1 * lam[i] + 1.0);
    out.modal.terms.push_back(term);
    sum += term;
  }
  out.value = b * b / (2.0 * tau * d) * sum;
  return out;
}

/// Inertia-free limit: (b^2 / 2 tau d) sum_i 1 / (1 + (k tau + k d gamma) l_i).
inline double dapi_h2_overdamped(const GridParameters& params, const Eigen::VectorXd& eigenvalues) {
  detail::require_closed_form(params, "overdamped distributed averaging formula");
  const Eigen::VectorXd lam = detail::checked_eigenvalues(eigenvalues);
  const double d = params.d[0], b = params.b[0], k = params.k[0];
  const double slope = k * params.tau + k * d * params.gamma;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) sum += 1.0 / (1.0 + slope * lam[i]);
  return b * b / (2.0 * params.tau * d) * sum;
}

/// gamma -> infinity: b^2 / (2 tau d), the broadcast value with tau_mu = tau.
inline double dapi_h2_highgain(const GridParameters& params) {
  detail::require_closed_form(params, "high-gain distributed averaging limit");
  const double b = params.b[0];
  return b * b / (2.0 * params.tau * params.d[0]);
}

}  // namespace freqperf
