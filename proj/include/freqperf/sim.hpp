#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/distributions/students_t.hpp>

#include "freqperf/errors.hpp"
#include "freqperf/lyapunov.hpp"
#include "freqperf/parallel.hpp"
#include "freqperf/rng.hpp"
#include "freqperf/state_space.hpp"

namespace freqperf {

enum class Scheme {
  euler_maruyama,  ///< x += dt A x + sqrt(dt) B w
  exact,           ///< x <- e^{A dt} x + chol(step covariance) w
};

inline const char* to_string(Scheme s) {
  return s == Scheme::euler_maruyama ? "euler_maruyama" : "exact";
}

/// Euler-Maruyama is accepted only when spectral_radius(A) * dt stays below
/// this bound.
inline constexpr double kMaxStepRatio = 0.1;

struct SimulationTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> outputs;
  std::vector<Eigen::VectorXd> states;  ///< empty unless requested
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::size_t stride = 1;
  Scheme scheme = Scheme::euler_maruyama;
  ControllerTag controller = ControllerTag::generic;
};

struct SimulationOptions {
  Scheme scheme = Scheme::euler_maruyama;
  std::size_t stride = 1;  ///< record every stride-th step
  bool record_states = false;
  std::optional<Eigen::VectorXd> x0;
};

struct VarianceEstimate {
  double mean_sq = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_seeds = 0;
  double burn_in = 0.0;
  double dt = 0.0;
  double horizon = 0.0;
  Scheme scheme = Scheme::euler_maruyama;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;  ///< post-burn-in time average of y'y per replicate
};

struct SimulationSettings {
  int n_seeds = 20;
  double dt = 1e-3;
  double horizon = 100.0;
  double burn_in = 20.0;
  Scheme scheme = Scheme::euler_maruyama;

  /// dt = 1e-3 min(1, 1/rho(A)), horizon = 500 / |max Re eig(A)|, 20% burn-in.
  static SimulationSettings defaults_for(const StateSpaceModel& model) {
    SimulationSettings s;
    const double rho = model.max_abs_eigenvalue();
    const double lead = std::abs(model.max_real_eigenvalue());
    s.dt = 1e-3 * std::min(1.0, rho > 0.0 ? 1.0 / rho : 1.0);
    s.horizon = 500.0 / lead;
    s.burn_in = 0.2 * s.horizon;
    return s;
  }
};

/// Seed of replicate `index` under `master`: two rounds of SplitMix64, so
/// neighbouring indices get unrelated streams.
inline std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index));
}

namespace detail {

/// Row-compressed copy of a dense matrix; the stepping loop is dominated by
/// tiny sparse products.
struct CompressedRows {
  Eigen::Index rows = 0;
  std::vector<int> start;
  std::vector<int> col;
  std::vector<double> val;

  explicit CompressedRows(const Eigen::MatrixXd& M) : rows(M.rows()) {
    start.reserve(static_cast<std::size_t>(rows) + 1);
    start.push_back(0);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (M(i, j) != 0.0) {
          col.push_back(static_cast<int>(j));
          val.push_back(M(i, j));
        }
      }
      start.push_back(static_cast<int>(col.size()));
    }
  }

  /// y[i] (+)= sum_j M(i, j) x[j]
  void apply(const double* __restrict x, double* __restrict y) const {
    const int* __restrict st = start.data();
    const int* __restrict cl = col.data();
    const double* __restrict v = val.data();
    for (Eigen::Index i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (int p = st[i]; p < st[i + 1]; ++p) acc += v[p] * x[cl[p]];
      y[i] = acc;
    }
  }
};

/// Discrete recursion x_{k+1} = F x_k + G w_k shared by both schemes. The
/// stepping loop works on [F G] applied to the stacked vector [x; w].
struct DiscreteRecursion {
  CompressedRows FG;
  CompressedRows C;
  Eigen::Index num_states;
  Eigen::Index noise_dim;

  DiscreteRecursion(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, const Eigen::MatrixXd& C_)
      : FG(stack(F, G)), C(C_), num_states(F.rows()), noise_dim(G.cols()) {}

 private:
  static Eigen::MatrixXd stack(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G) {
    Eigen::MatrixXd out(F.rows(), F.cols() + G.cols());
    out << F, G;
    return out;
  }
};

inline void check_time_grid(double dt, double horizon) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be positive");
  if (horizon < dt) throw ParameterError("horizon shorter than one step");
}

inline DiscreteRecursion discretize(const StateSpaceModel& model, double dt, Scheme scheme) {
  const Eigen::MatrixXd& A = model.A();
  const Eigen::Index nx = A.rows();
  if (scheme == Scheme::euler_maruyama) {
    const double rho = model.max_abs_eigenvalue();
    if (!(rho * dt < kMaxStepRatio)) {
      throw StepSizeError("Euler-Maruyama step too large: rho(A) dt = " + std::to_string(rho * dt) +
                          " (needs < " + std::to_string(kMaxStepRatio) + ")");
    }
    const Eigen::MatrixXd F = Eigen::MatrixXd::Identity(nx, nx) + dt * A;
    return DiscreteRecursion(F, std::sqrt(dt) * model.B(), model.C());
  }
  // Exact: F = e^{A dt}; with P the controllability Gramian the one-step
  // noise covariance is P - F P F'.
  const Eigen::MatrixXd F = (A * dt).exp();
  const Eigen::MatrixXd BBt = model.B() * model.B().transpose();
  const Eigen::MatrixXd P = solve_lyapunov(A.transpose(), BBt);
  Eigen::MatrixXd Qd = P - F * P * F.transpose();
  Qd = 0.5 * (Qd + Qd.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qd);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd G = es.eigenvectors() * root.asDiagonal();
  return DiscreteRecursion(F, G, model.C());
}

/// Normals are drawn this many steps ahead.
inline constexpr std::size_t kNoiseBlock = 256;

/// Steps the recursion `steps` times from x0, calling observe(k, x) for
/// k = 0..steps (k = 0 is the initial state). x points at num_states values.
template <class Observer>
void run_recursion(const DiscreteRecursion& rec, const Eigen::VectorXd& x0, std::uint64_t seed,
                   std::size_t steps, Observer&& observe) {
  const std::uint64_t seeds[1] = {seed};
  LaneNormals<1> normals(seeds);
  const Eigen::Index nx = rec.num_states, nw = rec.noise_dim;
  // Two stacked buffers [x; w], swapped every step.
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(nx + nw);
  Eigen::VectorXd nxt = cur;
  cur.head(nx) = x0;
  observe(std::size_t{0}, static_cast<const double*>(cur.data()));
  std::vector<double> noise(static_cast<std::size_t>(nw) * kNoiseBlock);
  for (std::size_t k = 1; k <= steps; ++k) {
    const std::size_t slot = (k - 1) % kNoiseBlock;
    if (slot == 0) normals.fill(noise.data(), std::min(kNoiseBlock, steps - k + 1) * static_cast<std::size_t>(nw));
    std::copy_n(noise.data() + slot * static_cast<std::size_t>(nw), nw, cur.data() + nx);
    rec.FG.apply(cur.data(), nxt.data());
    cur.swap(nxt);
    if ((k & 0xfff) == 0 || k == steps) {
      const auto x = cur.head(nx);
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e150) {
        throw DivergenceError("simulation diverged at step " + std::to_string(k));
      }
    }
    observe(k, static_cast<const double*>(cur.data()));
  }
}

/// Replicates stepped together; each lane owns its own generator, so a
/// lane's path is the same whichever group it lands in.
inline constexpr int kLanes = 4;

/// Lock-step version of run_recursion for kLanes replicates. Buffers are
/// row-major with kLanes columns; observe(k, z) sees state i of lane l at
/// z[i * kLanes + l].
template <class Observer>
void run_recursion_lanes(const DiscreteRecursion& rec, const std::uint64_t (&seeds)[kLanes],
                         std::size_t steps, Observer&& observe) {
  LaneNormals<kLanes> normals(seeds);
  const Eigen::Index nx = rec.num_states, nw = rec.noise_dim;
  std::vector<double> cur(static_cast<std::size_t>((nx + nw) * kLanes), 0.0);
  std::vector<double> nxt = cur;
  const int* __restrict st = rec.FG.start.data();
  const int* __restrict cl = rec.FG.col.data();
  const double* __restrict v = rec.FG.val.data();
  observe(std::size_t{0}, static_cast<const double*>(cur.data()));
  std::vector<double> noise(static_cast<std::size_t>(nw) * kLanes * kNoiseBlock);
  for (std::size_t k = 1; k <= steps; ++k) {
    const std::size_t slot = (k - 1) % kNoiseBlock;
    if (slot == 0) normals.fill(noise.data(), std::min(kNoiseBlock, steps - k + 1) * static_cast<std::size_t>(nw));
    double* __restrict z = cur.data();
    double* __restrict out = nxt.data();
    std::copy_n(noise.data() + slot * static_cast<std::size_t>(nw * kLanes), nw * kLanes, z + nx * kLanes);
    for (Eigen::Index i = 0; i < nx; ++i) {
      double acc[kLanes] = {};
      for (int p = st[i]; p < st[i + 1]; ++p) {
        const double a = v[p];
        const double* src = z + cl[p] * kLanes;
        for (int l = 0; l < kLanes; ++l) acc[l] += a * src[l];
      }
      for (int l = 0; l < kLanes; ++l) out[i * kLanes + l] = acc[l];
    }
    cur.swap(nxt);
    if ((k & 0xfff) == 0 || k == steps) {
      for (Eigen::Index i = 0; i < nx * kLanes; ++i) {
        const double x = cur[static_cast<std::size_t>(i)];
        if (!std::isfinite(x) || std::abs(x) > 1e150) {
          throw DivergenceError("simulation diverged at step " + std::to_string(k));
        }
      }
    }
    observe(k, static_cast<const double*>(cur.data()));
  }
}

inline std::size_t step_count(double span, double dt) {
  return static_cast<std::size_t>(std::llround(span / dt));
}

/// Post-burn-in time averages of y'y for kLanes replicates at once.
inline void lane_mean_squares(const DiscreteRecursion& rec, const std::uint64_t (&seeds)[kLanes],
                              std::size_t steps, std::size_t burn, double (&out)[kLanes]) {
  const int* st = rec.C.start.data();
  const int* cl = rec.C.col.data();
  const double* v = rec.C.val.data();
  const Eigen::Index ny = rec.C.rows;
  double sum[kLanes] = {};
  run_recursion_lanes(rec, seeds, steps, [&](std::size_t k, const double* z) {
    if (k <= burn) return;
    for (Eigen::Index i = 0; i < ny; ++i) {
      double y[kLanes] = {};
      for (int p = st[i]; p < st[i + 1]; ++p) {
        for (int l = 0; l < kLanes; ++l) y[l] += v[p] * z[cl[p] * kLanes + l];
      }
      for (int l = 0; l < kLanes; ++l) sum[l] += y[l] * y[l];
    }
  });
  for (int l = 0; l < kLanes; ++l) out[l] = sum[l] / static_cast<double>(steps - burn);
}

}  // namespace detail

/// One noise realization. White noise of unit intensity enters through B.
inline SimulationTrace simulate(const StateSpaceModel& model, std::uint64_t seed, double dt,
                                double horizon, const SimulationOptions& opts = {}) {
  detail::check_time_grid(dt, horizon);
  if (opts.stride == 0) throw ParameterError("stride must be >= 1");
  const auto rec = detail::discretize(model, dt, opts.scheme);
  const Eigen::VectorXd x0 = opts.x0.value_or(Eigen::VectorXd::Zero(model.num_states()));
  if (x0.size() != model.num_states()) throw DimensionError("x0 does not match the state dimension");

  SimulationTrace trace;
  trace.seed = seed;
  trace.dt = dt;
  trace.stride = opts.stride;
  trace.scheme = opts.scheme;
  trace.controller = model.controller();
  const std::size_t steps = detail::step_count(horizon, dt);
  const std::size_t samples = steps / opts.stride + 1;
  trace.times.reserve(samples);
  trace.outputs.reserve(samples);
  detail::run_recursion(rec, x0, seed, steps, [&](std::size_t k, const double* x) {
    if (k % opts.stride != 0) return;
    const Eigen::Map<const Eigen::VectorXd> state(x, model.num_states());
    trace.times.push_back(static_cast<double>(k) * dt);
    trace.outputs.push_back(model.C() * state);
    if (opts.record_states) trace.states.push_back(state);
  });
  return trace;
}

/// Time average of y'y over (burn_in, horizon] for one replicate.
inline double replicate_mean_square(const StateSpaceModel& model, std::uint64_t seed,
                                    const SimulationSettings& s) {
  const auto rec = detail::discretize(model, s.dt, s.scheme);
  const std::size_t steps = detail::step_count(s.horizon, s.dt);
  const std::size_t burn = detail::step_count(s.burn_in, s.dt);
  Eigen::VectorXd y(model.num_outputs());
  double sum = 0.0;
  detail::run_recursion(rec, Eigen::VectorXd::Zero(model.num_states()), seed, steps,
                        [&](std::size_t k, const double* x) {
                          if (k <= burn) return;
                          rec.C.apply(x, y.data());
                          sum += y.squaredNorm();
                        });
  return sum / static_cast<double>(steps - burn);
}

/// Mean of per-replicate time averages with a two-sided 95% Student-t
/// interval. Replicates run concurrently; results do not depend on thread
/// scheduling.
inline VarianceEstimate estimate_steady_state_variance(const StateSpaceModel& model,
                                                       const SimulationSettings& s,
                                                       std::uint64_t master_seed) {
  detail::check_time_grid(s.dt, s.horizon);
  if (s.n_seeds < 2) throw ParameterError("need at least two replicates");
  if (!(s.burn_in >= 0.0) || !(s.burn_in < s.horizon)) {
    throw ParameterError("burn-in must lie in [0, horizon)");
  }
  VarianceEstimate est;
  est.n_seeds = s.n_seeds;
  est.burn_in = s.burn_in;
  est.dt = s.dt;
  est.horizon = s.horizon;
  est.scheme = s.scheme;
  est.master_seed = master_seed;
  const auto count = static_cast<std::size_t>(s.n_seeds);
  est.seeds.resize(count);
  est.per_seed.resize(count);
  for (std::size_t i = 0; i < count; ++i) est.seeds[i] = replicate_seed(master_seed, i);
  // Replicates run kLanes at a time; a short last group is padded with
  // extra streams whose results are dropped.
  const auto rec = detail::discretize(model, s.dt, s.scheme);
  const std::size_t steps = detail::step_count(s.horizon, s.dt);
  const std::size_t burn = detail::step_count(s.burn_in, s.dt);
  const std::size_t groups = (count + detail::kLanes - 1) / detail::kLanes;
  detail::parallel_for(groups, [&](std::size_t g) {
    std::uint64_t seeds[detail::kLanes];
    double values[detail::kLanes];
    for (int l = 0; l < detail::kLanes; ++l) {
      const std::size_t i = g * detail::kLanes + static_cast<std::size_t>(l);
      seeds[l] = i < count ? est.seeds[i] : replicate_seed(master_seed, i);
    }
    detail::lane_mean_squares(rec, seeds, steps, burn, values);
    for (int l = 0; l < detail::kLanes; ++l) {
      const std::size_t i = g * detail::kLanes + static_cast<std::size_t>(l);
      if (i < count) est.per_seed[i] = values[l];
    }
  });

  double mean = 0.0;
  for (double v : est.per_seed) mean += v;
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (double v : est.per_seed) var += (v - mean) * (v - mean);
  var /= static_cast<double>(count - 1);
  const boost::math::students_t_distribution<double> t(static_cast<double>(count - 1));
  const double q = boost::math::quantile(boost::math::complement(t, 0.025));
  const double half = q * std::sqrt(var / static_cast<double>(count));
  est.mean_sq = mean;
  est.ci_low = std::max(0.0, mean - half);
  est.ci_high = mean + half;
  return est;
}

/// Classical RK4 for x' = A x + B u with a constant input; returns x(horizon).
inline Eigen::VectorXd simulate_deterministic(const StateSpaceModel& model, const Eigen::VectorXd& x0,
                                              const Eigen::VectorXd& input, double dt, double horizon) {
  detail::check_time_grid(dt, horizon);
  if (x0.size() != model.num_states()) throw DimensionError("x0 does not match the state dimension");
  if (input.size() != model.num_inputs()) throw DimensionError("input does not match B");
  const Eigen::MatrixXd& A = model.A();
  const Eigen::VectorXd forcing = model.B() * input;
  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x + forcing; };
  Eigen::VectorXd x = x0;
  const std::size_t steps = detail::step_count(horizon, dt);
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw DivergenceError("deterministic integration diverged");
  }
  return x;
}

}  // namespace freqperf
