#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/random/uniform_real_distribution.hpp>
#include <nlohmann/json.hpp>

#include "freqperf/analytic.hpp"
#include "freqperf/config.hpp"
#include "freqperf/h2.hpp"
#include "freqperf/models.hpp"
#include "freqperf/parallel.hpp"
#include "freqperf/rng.hpp"
#include "freqperf/sim.hpp"

namespace freqperf {

/// 6 significant digits, '.' separator, independent of the global locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(6) << v;
  return os.str();
}

using Cell = std::variant<std::monostate, double, std::string>;

/// Rectangular result set shared by every command. CSV cells are formatted
/// with format_number; JSON keeps full double precision.
struct ResultTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void write_csv(std::ostream& os) const {
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string out = "\"";
      for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
      return out + "\"";
    };
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        if (const auto* d = std::get_if<double>(&row[i])) os << format_number(*d);
        if (const auto* s = std::get_if<std::string>(&row[i])) os << quote(*s);
      }
      os << '\n';
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < row.size() && i < header.size(); ++i) {
        if (const auto* d = std::get_if<double>(&row[i])) {
          obj[header[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(format_number(*d));
        } else if (const auto* s = std::get_if<std::string>(&row[i])) {
          obj[header[i]] = *s;
        } else {
          obj[header[i]] = nullptr;
        }
      }
      out.push_back(std::move(obj));
    }
    return out;
  }
};

inline StateSpaceModel build_model(const ControllerSpec& c, const NetworkGraph& g, const GridParameters& p,
                                   const OutputSpec& out = {}) {
  StateSpaceModel model = [&] {
    switch (c.kind) {
      case ControllerKind::primal_dual: return assemble_primal_dual(g, p);
      case ControllerKind::dapi: return assemble_dapi(g, p);
      default: return assemble_broadcast(g, p);
    }
  }();
  if (out.frequency_penalty) model = augment_frequency_penalty(model, out.sqrt_pi * out.sqrt_pi);
  return model;
}

/// Closed-form value for a controller when one exists, otherwise the reason.
struct AnalyticValue {
  std::optional<double> value;
  std::optional<double> bound;
  std::string note;
};

inline AnalyticValue analytic_for(const ControllerSpec& c, const NetworkGraph& g, const GridParameters& p,
                                  const OutputSpec& out = {}) {
  AnalyticValue a;
  if (out.frequency_penalty && out.sqrt_pi > 0.0) {
    a.note = "not applicable (frequency penalty in output)";
    return a;
  }
  if (!p.is_uniform() || !p.has_identical_costs()) {
    a.note = "not applicable (parameters not uniform)";
    return a;
  }
  switch (c.kind) {
    case ControllerKind::broadcast:
      a.value = broadcast_h2(p);
      break;
    case ControllerKind::primal_dual:
      a.bound = pd_h2_upper_bound(p);
      if (p.alpha == 0.0) {
        a.value = pd_h2_exact_alpha0(p);
      } else {
        a.note = "upper bound only (alpha > 0)";
      }
      break;
    case ControllerKind::dapi:
      a.value = dapi_h2(p, spectrum(g)).value;
      break;
  }
  return a;
}

namespace detail {

inline double relative_error(double x, double ref) {
  return std::abs(x - ref) / std::max(std::abs(ref), 1e-300);
}

/// Re-raises the active freqperf error with `context` prepended, keeping the
/// validation/numerical split that drives exit codes.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(context + ": " + e.what());
  }
}

inline Cell optional_cell(const std::optional<double>& v) {
  return v ? Cell(*v) : Cell(std::string("n/a"));
}

}  // namespace detail

// ---------------------------------------------------------------- analyze

inline ResultTable cmd_analyze(const ExperimentConfig& cfg) {
  ResultTable t;
  t.header = {"controller", "n", "numerical", "analytic", "rel_err", "bound", "residual", "note"};
  const NetworkGraph g = cfg.network.build();
  t.rows.resize(cfg.controllers.size());
  detail::parallel_for(cfg.controllers.size(), [&](std::size_t i) {
    const auto& c = cfg.controllers[i];
    const GridParameters p = cfg.params.build(g.num_nodes(), c);
    const H2Result num = h2_norm(build_model(c, g, p, cfg.output));
    const AnalyticValue a = analytic_for(c, g, p, cfg.output);
    t.rows[i] = {c.label(),
                 static_cast<double>(g.num_nodes()),
                 num.value,
                 detail::optional_cell(a.value),
                 a.value ? Cell(detail::relative_error(num.value, *a.value)) : Cell(std::string("n/a")),
                 detail::optional_cell(a.bound),
                 num.diagnostics.residual,
                 a.note};
  });
  return t;
}

// ---------------------------------------------------------------- table1

struct Table1Column {
  std::string name;
  ControllerSpec controller;
};

inline const std::vector<Table1Column>& table1_columns() {
  static const std::vector<Table1Column> cols{
      {"pd_alpha0", {ControllerKind::primal_dual, 0.0}},
      {"pd_alpha5", {ControllerKind::primal_dual, 5.0}},
      {"dapi_gamma5", {ControllerKind::dapi, 5.0}},
      {"broadcast", {ControllerKind::broadcast, 0.0}},
  };
  return cols;
}

inline const std::vector<double>& table1_sqrt_pi() {
  static const std::vector<double> grid{0.0, 0.3, 0.6, 0.9, 1.2, 1.5};
  return grid;
}

/// Published reference values, rows by sqrt(pi), columns as table1_columns().
inline const std::vector<std::vector<double>>& table1_reference() {
  static const std::vector<std::vector<double>> ref{
      {0.417, 0.569, 0.088, 0.083}, {0.639, 0.791, 0.311, 0.308}, {1.307, 1.458, 0.981, 0.983},
      {2.421, 2.569, 2.095, 2.108}, {3.980, 4.125, 3.656, 3.683}, {5.984, 6.125, 5.663, 5.708},
  };
  return ref;
}

inline constexpr double kTable1RelTolerance = 0.05;

struct Table1Result {
  std::vector<std::vector<double>> values;  ///< [row][column]
  double max_rel_dev = 0.0;
  bool within_tolerance = true;
  ResultTable table;
};

/// Five-bus path, unit line weights, m = d = b = 1, k = 4, all time
/// constants 6.
inline Table1Result cmd_table1() {
  const NetworkGraph g = build_path(5);
  const auto& cols = table1_columns();
  const auto& grid = table1_sqrt_pi();
  const auto& ref = table1_reference();
  ParamSpec base;

  Table1Result out;
  out.values.assign(grid.size(), std::vector<double>(cols.size(), 0.0));
  detail::parallel_for(grid.size() * cols.size(), [&](std::size_t idx) {
    const std::size_t r = idx / cols.size(), c = idx % cols.size();
    const GridParameters p = base.build(5, cols[c].controller);
    const OutputSpec o{true, grid[r]};
    out.values[r][c] = h2_norm(build_model(cols[c].controller, g, p, o)).value;
  });

  out.table.header = {"sqrt_pi"};
  for (const auto& c : cols) out.table.header.push_back(c.name);
  for (const auto& c : cols) out.table.header.push_back("ref_" + c.name);
  for (const auto& c : cols) out.table.header.push_back("dev_" + c.name);
  for (const auto& c : cols) out.table.header.push_back("reldev_" + c.name);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    std::vector<Cell> row{grid[r]};
    for (double v : out.values[r]) row.emplace_back(v);
    for (double v : ref[r]) row.emplace_back(v);
    for (std::size_t c = 0; c < cols.size(); ++c) row.emplace_back(std::abs(out.values[r][c] - ref[r][c]));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double rel = detail::relative_error(out.values[r][c], ref[r][c]);
      out.max_rel_dev = std::max(out.max_rel_dev, rel);
      row.emplace_back(rel);
    }
    out.table.rows.push_back(std::move(row));
  }
  out.within_tolerance = out.max_rel_dev <= kTable1RelTolerance;
  return out;
}

// ---------------------------------------------------------------- sweep

inline ResultTable cmd_sweep(const ExperimentConfig& cfg) {
  if (cfg.run.kind != RunSpec::Kind::sweep) throw ConfigError("run.type must be 'sweep' for the sweep command");
  const auto& grid = cfg.run.grid;
  const auto& var = cfg.run.variable;
  const std::size_t nc = cfg.controllers.size();

  ResultTable t;
  t.header = {"variable", "value", "controller", "n", "numerical", "analytic", "rel_err", "bound"};
  t.rows.resize(grid.size() * nc);
  detail::parallel_for(t.rows.size(), [&](std::size_t idx) {
    const double x = grid[idx / nc];
    ControllerSpec c = cfg.controllers[idx % nc];
    const int n = var == "n" ? static_cast<int>(x) : cfg.network.n;
    if (var == "gamma" && c.kind == ControllerKind::dapi) c.gain = x;
    if (var == "alpha" && c.kind == ControllerKind::primal_dual) c.gain = x;
    try {
      const NetworkGraph g = cfg.network.build_for(n);
      const GridParameters p = cfg.params.build(n, c);
      const double num = h2_norm(build_model(c, g, p, cfg.output)).value;
      const AnalyticValue a = analytic_for(c, g, p, cfg.output);
      t.rows[idx] = {var,
                     x,
                     c.label(),
                     static_cast<double>(n),
                     num,
                     detail::optional_cell(a.value),
                     a.value ? Cell(detail::relative_error(num, *a.value)) : Cell(std::string("n/a")),
                     detail::optional_cell(a.bound)};
    } catch (const Error&) {
      detail::rethrow_with_context("sweep point " + var + " = " + format_number(x) + ", " + c.label());
    }
  });
  return t;
}

// ---------------------------------------------------------------- simulate

/// Non-uniform draws for the variance-ordering experiment: m, d and k
/// independently uniform in [0.5, 1.5] times nominal, from a seeded stream.
inline GridParameters draw_nonuniform(int n, std::uint64_t seed, const ScalarParameters& nominal = {}) {
  GridParameters p = GridParameters::uniform(n, nominal);
  Xoshiro256pp engine(seed);
  boost::random::uniform_real_distribution<double> u(0.5, 1.5);
  for (int i = 0; i < n; ++i) p.m[i] = nominal.m * u(engine);
  for (int i = 0; i < n; ++i) p.d[i] = nominal.d * u(engine);
  for (int i = 0; i < n; ++i) p.k[i] = nominal.k * u(engine);
  return p;
}

/// Path-5 with one non-uniform draw, PD alpha = 1, DAPI gamma = 1 and the
/// broadcast loop, simulated with the exact discretization.
inline ExperimentConfig figure1_preset(std::uint64_t draw_seed) {
  ExperimentConfig cfg;
  const GridParameters p = draw_nonuniform(5, draw_seed);
  cfg.params.m = p.m;
  cfg.params.d = p.d;
  cfg.params.k = p.k;
  cfg.controllers = {{ControllerKind::primal_dual, 1.0}, {ControllerKind::dapi, 1.0}, {ControllerKind::broadcast, 0.0}};
  cfg.run.kind = RunSpec::Kind::simulate;
  cfg.run.scheme = Scheme::exact;
  cfg.run.dt = 0.05;
  cfg.run.seeds = 20;
  cfg.run.seed = draw_seed;
  return cfg;
}

inline SimulationSettings settings_for(const StateSpaceModel& model, const RunSpec& run) {
  SimulationSettings s = SimulationSettings::defaults_for(model);
  s.n_seeds = run.seeds;
  s.scheme = run.scheme;
  if (run.dt > 0.0) s.dt = run.dt;
  if (run.horizon > 0.0) {
    s.horizon = run.horizon;
    s.burn_in = 0.2 * s.horizon;
  }
  if (run.burn_in >= 0.0) s.burn_in = run.burn_in;
  return s;
}

struct SimulationReport {
  std::string controller;
  double lyapunov = 0.0;
  VarianceEstimate estimate;

  bool ci_contains_lyapunov() const {
    return estimate.ci_low <= lyapunov && lyapunov <= estimate.ci_high;
  }
};

inline std::vector<SimulationReport> cmd_simulate(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  const NetworkGraph g = cfg.network.build();
  std::vector<SimulationReport> out;
  for (const auto& c : cfg.controllers) {
    const GridParameters p = cfg.params.build(g.num_nodes(), c);
    const StateSpaceModel model = build_model(c, g, p, cfg.output);
    SimulationReport r;
    r.controller = c.label();
    r.lyapunov = h2_norm(model).value;
    r.estimate = estimate_steady_state_variance(model, settings_for(model, cfg.run), master_seed);
    out.push_back(std::move(r));
  }
  return out;
}

inline ResultTable simulation_table(const std::vector<SimulationReport>& reports) {
  ResultTable t;
  t.header = {"controller", "lyapunov", "mean_sq", "ci_low", "ci_high", "contains", "n_seeds",
              "dt", "horizon", "burn_in", "scheme", "master_seed"};
  for (const auto& r : reports) {
    const auto& e = r.estimate;
    t.rows.push_back({r.controller, r.lyapunov, e.mean_sq, e.ci_low, e.ci_high,
                      std::string(r.ci_contains_lyapunov() ? "yes" : "no"), static_cast<double>(e.n_seeds),
                      e.dt, e.horizon, e.burn_in, std::string(to_string(e.scheme)),
                      std::to_string(e.master_seed)});
  }
  return t;
}

inline nlohmann::ordered_json simulation_json(const std::vector<SimulationReport>& reports) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    const auto& e = r.estimate;
    out.push_back({{"controller", r.controller},
                   {"lyapunov", r.lyapunov},
                   {"mean_sq", e.mean_sq},
                   {"ci_low", e.ci_low},
                   {"ci_high", e.ci_high},
                   {"contains_lyapunov", r.ci_contains_lyapunov()},
                   {"n_seeds", e.n_seeds},
                   {"dt", e.dt},
                   {"horizon", e.horizon},
                   {"burn_in", e.burn_in},
                   {"scheme", to_string(e.scheme)},
                   {"master_seed", e.master_seed},
                   {"seeds", e.seeds},
                   {"per_seed", e.per_seed}});
  }
  return out;
}

/// Long-format trace of the first replicate of every controller:
/// controller,t,output,value with output y1..yp and yty.
inline void write_trace_csv(std::ostream& os, const ExperimentConfig& cfg, std::uint64_t master_seed,
                            std::size_t max_samples = 5000) {
  const NetworkGraph g = cfg.network.build();
  os << "controller,t,output,value\n";
  for (const auto& c : cfg.controllers) {
    const GridParameters p = cfg.params.build(g.num_nodes(), c);
    const StateSpaceModel model = build_model(c, g, p, cfg.output);
    const SimulationSettings s = settings_for(model, cfg.run);
    const std::size_t steps = detail::step_count(s.horizon, s.dt);
    SimulationOptions opts;
    opts.scheme = s.scheme;
    opts.stride = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, max_samples));
    const SimulationTrace tr = simulate(model, replicate_seed(master_seed, 0), s.dt, s.horizon, opts);
    const std::string label = c.label();
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const Eigen::VectorXd& y = tr.outputs[k];
      const std::string prefix = label + "," + format_number(tr.times[k]) + ",";
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        os << prefix << 'y' << (i + 1) << ',' << format_number(y[i]) << '\n';
      }
      os << prefix << "yty," << format_number(y.squaredNorm()) << '\n';
    }
  }
}

}  // namespace freqperf
