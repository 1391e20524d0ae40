#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "freqperf/errors.hpp"
#include "freqperf/graph.hpp"
#include "freqperf/parameters.hpp"
#include "freqperf/sim.hpp"

// JSON experiment description. Bus numbers in edge lists are 1-based, every
// section is optional and falls back to the five-bus benchmark, and unknown
// keys are rejected. configs/ holds samples; the schema is in the README.

namespace freqperf {

enum class ControllerKind { broadcast, primal_dual, dapi };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::broadcast;
  double gain = 0.0;  ///< alpha for primal_dual, gamma for dapi, unused otherwise

  std::string label() const {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    switch (kind) {
      case ControllerKind::broadcast: return "broadcast";
      case ControllerKind::primal_dual: os << "primal_dual(alpha=" << gain << ")"; break;
      case ControllerKind::dapi: os << "dapi(gamma=" << gain << ")"; break;
    }
    return os.str();
  }
};

struct NetworkSpec {
  enum class Kind { path, edges } kind = Kind::path;
  int n = 5;
  double weight = 1.0;
  std::vector<Edge> edges;  ///< 0-based once parsed

  NetworkGraph build() const { return build_for(n); }

  /// Path networks can be rebuilt at any size; explicit edge lists cannot.
  NetworkGraph build_for(int size) const {
    if (kind == Kind::path) return build_path(size, weight);
    if (size != n) throw ConfigError("network: an explicit edge list has fixed size " + std::to_string(n));
    return build_from_edges(n, edges);
  }
};

/// Scalars fill every bus; per-bus arrays override them and pin the size.
struct ParamSpec {
  ScalarParameters base;
  std::optional<Eigen::VectorXd> m, d, b, k, r;

  bool has_vectors() const { return m || d || b || k || r; }

  GridParameters build(int n, const ControllerSpec& c) const {
    ScalarParameters s = base;
    if (c.kind == ControllerKind::primal_dual) s.alpha = c.gain;
    if (c.kind == ControllerKind::dapi) s.gamma = c.gain;
    GridParameters p = GridParameters::uniform(n, s);
    auto take = [n](const std::optional<Eigen::VectorXd>& src, Eigen::VectorXd& dst, const char* name) {
      if (!src) return;
      if (src->size() != n) {
        throw ConfigError(std::string("params.") + name + " has " + std::to_string(src->size()) +
                          " entries but the network has " + std::to_string(n) + " buses");
      }
      dst = *src;
    };
    take(m, p.m, "m");
    take(d, p.d, "d");
    take(b, p.b, "b");
    take(k, p.k, "k");
    take(r, p.r, "r");
    p.validate(n);
    return p;
  }
};

struct OutputSpec {
  bool frequency_penalty = false;
  double sqrt_pi = 0.0;
};

struct RunSpec {
  enum class Kind { h2, analytic, simulate, table1, sweep } kind = Kind::h2;
  // simulate; non-positive values mean "use the model-dependent default"
  int seeds = 20;
  double dt = 0.0;
  double horizon = 0.0;
  double burn_in = -1.0;
  Scheme scheme = Scheme::euler_maruyama;
  std::uint64_t seed = 1;
  // sweep
  std::string variable;
  std::vector<double> grid;
};

struct ExperimentConfig {
  NetworkSpec network;
  ParamSpec params;
  std::vector<ControllerSpec> controllers{ControllerSpec{}};
  OutputSpec output;
  RunSpec run;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline int get_int(const json& obj, const std::string& where, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

inline std::string get_string(const json& obj, const std::string& where, const char* key,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline NetworkSpec parse_network(const json& j) {
  reject_unknown(j, "network", {"kind", "n", "weight", "edges"});
  NetworkSpec net;
  const std::string kind = get_string(j, "network", "kind", "path");
  net.n = get_int(j, "network", "n", 5);
  if (kind == "path") {
    if (j.contains("edges")) throw ConfigError("network: 'edges' is only valid with kind 'edges'");
    net.weight = get_number(j, "network", "weight", 1.0);
    return net;
  }
  if (kind != "edges") throw ConfigError("network.kind: expected 'path' or 'edges', got '" + kind + "'");
  if (j.contains("weight")) throw ConfigError("network: 'weight' is only valid with kind 'path'");
  if (!j.contains("edges") || !j.at("edges").is_array()) {
    throw ConfigError("network.edges: expected an array of [from, to] or [from, to, weight]");
  }
  net.kind = NetworkSpec::Kind::edges;
  for (const json& e : j.at("edges")) {
    if (!e.is_array() || e.size() < 2 || e.size() > 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || (e.size() == 3 && !e[2].is_number())) {
      throw ConfigError("network.edges: bad entry " + e.dump());
    }
    Edge edge{e[0].get<int>() - 1, e[1].get<int>() - 1, e.size() == 3 ? e[2].get<double>() : 1.0, 1};
    net.edges.push_back(edge);
  }
  // Surface graph errors (bad buses, duplicates, disconnection) at load time.
  build_from_edges(net.n, net.edges);
  return net;
}

inline ParamSpec parse_params(const json& j) {
  reject_unknown(j, "params", {"m", "d", "b", "k", "r", "tau_mu", "tau_nu", "tau"});
  ParamSpec p;
  auto per_bus = [&](const char* key, double& scalar, std::optional<Eigen::VectorXd>& vec) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number()) {
      scalar = v.get<double>();
    } else if (v.is_array() && !v.empty()) {
      Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(std::string("params.") + key + ": non-numeric entry");
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
      }
      vec = out;
    } else {
      throw ConfigError(std::string("params.") + key + ": expected a number or a nonempty array");
    }
  };
  double unused_r = 0.0;
  per_bus("m", p.base.m, p.m);
  per_bus("d", p.base.d, p.d);
  per_bus("b", p.base.b, p.b);
  per_bus("k", p.base.k, p.k);
  if (j.contains("r") && !j.at("r").is_array()) throw ConfigError("params.r: expected an array");
  per_bus("r", unused_r, p.r);
  p.base.tau_mu = get_number(j, "params", "tau_mu", p.base.tau_mu);
  p.base.tau_nu = get_number(j, "params", "tau_nu", p.base.tau_nu);
  p.base.tau = get_number(j, "params", "tau", p.base.tau);
  return p;
}

inline ControllerSpec parse_controller(const json& j, const std::string& where) {
  const std::string type = get_string(j, where, "type", "");
  ControllerSpec c;
  if (type == "broadcast") {
    reject_unknown(j, where, {"type"});
  } else if (type == "primal_dual") {
    reject_unknown(j, where, {"type", "alpha"});
    c.kind = ControllerKind::primal_dual;
    c.gain = get_number(j, where, "alpha", 0.0);
    if (!(c.gain >= 0.0)) throw ConfigError(where + ".alpha must be >= 0");
  } else if (type == "dapi") {
    reject_unknown(j, where, {"type", "gamma"});
    c.kind = ControllerKind::dapi;
    c.gain = get_number(j, where, "gamma", 5.0);
    if (!(c.gain > 0.0)) throw ConfigError(where + ".gamma must be > 0");
  } else {
    throw ConfigError(where + ".type: expected 'broadcast', 'primal_dual' or 'dapi', got '" + type + "'");
  }
  return c;
}

inline OutputSpec parse_output(const json& j) {
  const std::string type = get_string(j, "output", "type", "cost");
  OutputSpec out;
  if (type == "cost") {
    reject_unknown(j, "output", {"type"});
  } else if (type == "cost_plus_frequency") {
    reject_unknown(j, "output", {"type", "sqrt_pi"});
    out.frequency_penalty = true;
    out.sqrt_pi = get_number(j, "output", "sqrt_pi", 0.0);
    if (!(out.sqrt_pi >= 0.0)) throw ConfigError("output.sqrt_pi must be >= 0");
  } else {
    throw ConfigError("output.type: expected 'cost' or 'cost_plus_frequency', got '" + type + "'");
  }
  return out;
}

inline RunSpec parse_run(const json& j) {
  const std::string type = get_string(j, "run", "type", "h2");
  RunSpec run;
  if (type == "h2" || type == "analytic" || type == "table1") {
    reject_unknown(j, "run", {"type"});
    run.kind = type == "h2" ? RunSpec::Kind::h2
             : type == "analytic" ? RunSpec::Kind::analytic
                                  : RunSpec::Kind::table1;
  } else if (type == "simulate") {
    reject_unknown(j, "run", {"type", "seeds", "dt", "horizon", "burn_in", "scheme", "seed"});
    run.kind = RunSpec::Kind::simulate;
    run.seeds = get_int(j, "run", "seeds", run.seeds);
    if (run.seeds < 2) throw ConfigError("run.seeds must be >= 2");
    run.dt = get_number(j, "run", "dt", 0.0);
    run.horizon = get_number(j, "run", "horizon", 0.0);
    run.burn_in = get_number(j, "run", "burn_in", -1.0);
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("run.seed: expected a nonnegative integer");
      run.seed = j.at("seed").get<std::uint64_t>();
    }
    const std::string scheme = get_string(j, "run", "scheme", "euler_maruyama");
    if (scheme == "exact") {
      run.scheme = Scheme::exact;
    } else if (scheme != "euler_maruyama") {
      throw ConfigError("run.scheme: expected 'euler_maruyama' or 'exact'");
    }
  } else if (type == "sweep") {
    reject_unknown(j, "run", {"type", "variable", "grid"});
    run.kind = RunSpec::Kind::sweep;
    run.variable = get_string(j, "run", "variable", "");
    if (run.variable != "n" && run.variable != "gamma" && run.variable != "alpha") {
      throw ConfigError("run.variable: expected 'n', 'gamma' or 'alpha'");
    }
    if (!j.contains("grid") || !j.at("grid").is_array() || j.at("grid").empty()) {
      throw ConfigError("run.grid: expected a nonempty array");
    }
    for (const json& v : j.at("grid")) {
      if (!v.is_number()) throw ConfigError("run.grid: non-numeric entry");
      const double x = v.get<double>();
      if (!run.grid.empty() && !(x > run.grid.back())) {
        throw ConfigError("run.grid: values must be strictly ascending");
      }
      if (run.variable == "n" && (x != std::floor(x) || x < 2)) {
        throw ConfigError("run.grid: sizes must be integers >= 2");
      }
      run.grid.push_back(x);
    }
  } else {
    throw ConfigError("run.type: unknown '" + type + "'");
  }
  return run;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown(j, "config", {"network", "params", "controller", "output", "run"});
  ExperimentConfig cfg;
  if (j.contains("network")) cfg.network = detail::parse_network(j.at("network"));
  if (j.contains("params")) cfg.params = detail::parse_params(j.at("params"));
  if (j.contains("controller")) {
    const auto& c = j.at("controller");
    cfg.controllers.clear();
    if (c.is_array()) {
      if (c.empty()) throw ConfigError("controller: empty list");
      for (std::size_t i = 0; i < c.size(); ++i) {
        cfg.controllers.push_back(detail::parse_controller(c[i], "controller[" + std::to_string(i) + "]"));
      }
    } else {
      cfg.controllers.push_back(detail::parse_controller(c, "controller"));
    }
  }
  if (j.contains("output")) cfg.output = detail::parse_output(j.at("output"));
  if (j.contains("run")) cfg.run = detail::parse_run(j.at("run"));

  if (cfg.run.kind == RunSpec::Kind::sweep && cfg.run.variable == "n" &&
      (cfg.network.kind != NetworkSpec::Kind::path || cfg.params.has_vectors())) {
    throw ConfigError("a sweep over n needs a path network and scalar parameters");
  }
  // Catch size mismatches and bad values before anything runs.
  cfg.network.build();
  for (const auto& c : cfg.controllers) cfg.params.build(cfg.network.n, c);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace freqperf
