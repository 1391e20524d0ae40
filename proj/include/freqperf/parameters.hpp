#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freqperf/errors.hpp"
#include "freqperf/graph.hpp"

namespace freqperf {

/// Scalar settings used to fill a uniform GridParameters. Defaults are the
/// five-bus benchmark configuration (m = d = b = 1, k = 4, all gains 6).
struct ScalarParameters {
  double m = 1.0;
  double d = 1.0;
  double b = 1.0;
  double k = 4.0;
  double tau_mu = 6.0;
  double tau_nu = 6.0;
  double tau = 6.0;
  double gamma = 5.0;
  double alpha = 0.0;
};

/// Physical and controller constants. Per-bus quantities are vectors of
/// length n; `r` holds the convex averaging weights of the broadcast
/// aggregator.
struct GridParameters {
  Eigen::VectorXd m;  ///< inertia
  Eigen::VectorXd d;  ///< damping / droop
  Eigen::VectorXd b;  ///< disturbance gain
  Eigen::VectorXd k;  ///< reserve cost coefficient
  Eigen::VectorXd r;  ///< aggregator weights, nonnegative, sum to one
  double tau_mu = 6.0;
  double tau_nu = 6.0;
  double tau = 6.0;
  double gamma = 5.0;
  double alpha = 0.0;

  static GridParameters uniform(int n, const ScalarParameters& s = {}) {
    if (n < 1) throw InvalidSizeError("parameter vectors need n >= 1");
    GridParameters p;
    p.m = Eigen::VectorXd::Constant(n, s.m);
    p.d = Eigen::VectorXd::Constant(n, s.d);
    p.b = Eigen::VectorXd::Constant(n, s.b);
    p.k = Eigen::VectorXd::Constant(n, s.k);
    p.r = Eigen::VectorXd::Constant(n, 1.0 / n);
    p.tau_mu = s.tau_mu;
    p.tau_nu = s.tau_nu;
    p.tau = s.tau;
    p.gamma = s.gamma;
    p.alpha = s.alpha;
    return p;
  }

  int size() const { return static_cast<int>(m.size()); }

  /// Throws ParameterError/DimensionError unless every invariant holds for a
  /// network of `n` buses.
  void validate(int n) const {
    auto check_vector = [n](const Eigen::VectorXd& v, const char* name, bool allow_zero) {
      if (v.size() != n) {
        throw DimensionError(std::string(name) + " has length " + std::to_string(v.size()) +
                             ", expected " + std::to_string(n));
      }
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const bool ok = allow_zero ? v[i] >= 0.0 : v[i] > 0.0;
        if (!ok || !std::isfinite(v[i])) {
          throw ParameterError(std::string(name) + "[" + std::to_string(i) + "] = " +
                               std::to_string(v[i]) + (allow_zero ? " must be >= 0" : " must be > 0"));
        }
      }
    };
    check_vector(m, "m", false);
    check_vector(d, "d", false);
    check_vector(b, "b", false);
    check_vector(k, "k", false);
    check_vector(r, "r", true);
    if (std::abs(r.sum() - 1.0) > 1e-12) {
      throw ParameterError("averaging weights r must sum to 1, got " + std::to_string(r.sum()));
    }
    auto check_gain = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be > 0");
    };
    check_gain(tau_mu, "tau_mu");
    check_gain(tau_nu, "tau_nu");
    check_gain(tau, "tau");
    check_gain(gamma, "gamma");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be >= 0");
  }

  /// Equal m, d, b and k across buses together with r = 1/n.
  bool is_uniform() const {
    auto constant = [](const Eigen::VectorXd& v) {
      return v.size() > 0 && (v.array() == v[0]).all();
    };
    if (!constant(m) || !constant(d) || !constant(b) || !constant(k)) return false;
    const double n = static_cast<double>(r.size());
    return ((r.array() - 1.0 / n).abs() <= 1e-15).all();
  }

  bool has_identical_costs() const { return k.size() > 0 && (k.array() == k[0]).all(); }
};

enum class DeflationStrategy { none, tree_coordinates, orthonormal_complement };

inline const char* to_string(DeflationStrategy s) {
  switch (s) {
    case DeflationStrategy::none: return "none";
    case DeflationStrategy::tree_coordinates: return "tree_coordinates";
    case DeflationStrategy::orthonormal_complement: return "orthonormal_complement";
  }
  return "?";
}

struct AssumptionReport {
  bool uniform = false;
  bool acyclic = false;
  bool identical_costs = false;
  bool broadcast_formula_valid = false;  ///< size-independent broadcast norm
  bool pd_formula_valid = false;         ///< alpha = 0 value and the alpha-bound
  bool dapi_formula_valid = false;       ///< modal sum over Laplacian eigenvalues
  DeflationStrategy deflation = DeflationStrategy::none;
  std::vector<std::string> notes;
};

/// Deflation used by the assemblers for a given graph.
inline DeflationStrategy deflation_for(const NetworkGraph& g) {
  if (g.num_nodes() == 1) return DeflationStrategy::none;
  return g.is_acyclic() ? DeflationStrategy::tree_coordinates
                        : DeflationStrategy::orthonormal_complement;
}

/// Report-only: never throws for inconsistent parameters, it records them.
inline AssumptionReport check_assumptions(const GridParameters& params, const NetworkGraph& g) {
  AssumptionReport rep;
  rep.acyclic = g.is_acyclic();
  rep.deflation = deflation_for(g);
  const bool sized = params.size() == g.num_nodes() && params.r.size() == g.num_nodes() &&
                     params.d.size() == g.num_nodes() && params.b.size() == g.num_nodes() &&
                     params.k.size() == g.num_nodes();
  if (!sized) {
    rep.notes.push_back("parameter vectors do not match the network size");
    return rep;
  }
  rep.uniform = params.is_uniform();
  rep.identical_costs = params.has_identical_costs();
  const bool closed_form = rep.uniform && rep.identical_costs;
  rep.broadcast_formula_valid = closed_form;
  rep.pd_formula_valid = closed_form;
  rep.dapi_formula_valid = closed_form;
  if (!rep.uniform) rep.notes.push_back("non-uniform m, d, b or r: closed forms not applicable");
  if (!rep.identical_costs) rep.notes.push_back("heterogeneous reserve costs k");
  if (!rep.acyclic) rep.notes.push_back("cyclic network: angles deflated with an orthonormal basis");
  return rep;
}

/// Economic-dispatch optimum and the primary-control frequency offset.
struct OperatingPoint {
  Eigen::VectorXd p_star;
  Eigen::VectorXd p_opt;
  Eigen::VectorXd theta_opt;
  double omega_ss = 0.0;
};

/// Optimal reserves p = -(1'P*/1'K^-1 1) K^-1 1 and angles theta = L^+(P* + p).
inline OperatingPoint optimal_dispatch(const Eigen::VectorXd& p_star, const GridParameters& params,
                                       const NetworkGraph& g) {
  const int n = g.num_nodes();
  params.validate(n);
  if (p_star.size() != n) throw DimensionError("p_star length does not match the network");

  OperatingPoint op;
  op.p_star = p_star;
  const Eigen::VectorXd k_inv = params.k.cwiseInverse();
  op.p_opt = -(p_star.sum() / k_inv.sum()) * k_inv;

  // On the complement of span{1}, (L + 11'/n)^-1 coincides with L^+.
  const Eigen::VectorXd balance = p_star + op.p_opt;
  Eigen::MatrixXd shifted = laplacian(g);
  shifted.array() += 1.0 / n;
  op.theta_opt = shifted.ldlt().solve(balance);
  op.theta_opt.array() -= op.theta_opt.mean();

  op.omega_ss = p_star.sum() / params.d.sum();
  return op;
}

}  // namespace freqperf
