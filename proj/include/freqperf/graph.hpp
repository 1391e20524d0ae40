#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "freqperf/errors.hpp"

namespace freqperf {

/// Undirected branch between buses `i < j` (0-based) with susceptance-like
/// weight. `sign` fixes the orientation used by the incidence matrix: +1
/// puts +sqrt(w) on bus i and -sqrt(w) on bus j, -1 flips both.
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
  int sign = 1;
};

/// Connected, weighted, simple graph of buses. Instances only come out of
/// build_path / build_from_edges, so every NetworkGraph satisfies the
/// connectivity, positivity and simplicity invariants.
class NetworkGraph {
 public:
  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Connected graphs are trees exactly when |E| = n - 1.
  bool is_acyclic() const { return num_edges() == n_ - 1; }

  /// Same graph with the orientation of edge `e` reversed.
  NetworkGraph with_flipped_edge(int e) const {
    if (e < 0 || e >= num_edges()) {
      throw EdgeIndexError("edge index " + std::to_string(e) + " out of range");
    }
    NetworkGraph out = *this;
    out.edges_[static_cast<std::size_t>(e)].sign *= -1;
    return out;
  }

  /// Same topology with every weight multiplied by `factor` (> 0).
  NetworkGraph scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
      throw WeightError("scale factor must be positive and finite");
    }
    NetworkGraph out = *this;
    for (auto& e : out.edges_) e.weight *= factor;
    return out;
  }

 private:
  NetworkGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {}

  friend NetworkGraph build_from_edges(int n, std::vector<Edge> edges);

  int n_ = 0;
  std::vector<Edge> edges_;
};

namespace detail {

inline int find_root(std::vector<int>& parent, int v) {
  while (parent[static_cast<std::size_t>(v)] != v) {
    auto& p = parent[static_cast<std::size_t>(v)];
    p = parent[static_cast<std::size_t>(p)];
    v = p;
  }
  return v;
}

}  // namespace detail

/// Validates and normalizes an edge list (endpoints are reordered so that
/// i < j; a reversed input pair flips the stored sign instead).
inline NetworkGraph build_from_edges(int n, std::vector<Edge> edges) {
  if (n < 1) throw InvalidSizeError("graph needs at least one node, got n = " + std::to_string(n));

  std::set<std::pair<int, int>> seen;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  int components = n;

  for (auto& e : edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
      throw EdgeIndexError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                           ") references a node outside 0.." + std::to_string(n - 1));
    }
    if (e.i == e.j) throw EdgeIndexError("self-loop at node " + std::to_string(e.i));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw WeightError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                        ") has nonpositive weight");
    }
    if (e.sign != 1 && e.sign != -1) throw ValidationError("edge sign must be +1 or -1");
    if (e.i > e.j) {
      std::swap(e.i, e.j);
      e.sign = -e.sign;
    }
    if (!seen.emplace(e.i, e.j).second) {
      throw DuplicateEdgeError("duplicate edge (" + std::to_string(e.i) + ", " +
                               std::to_string(e.j) + ")");
    }
    const int a = detail::find_root(parent, e.i);
    const int b = detail::find_root(parent, e.j);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  if (components != 1) {
    throw ConnectivityError("graph is disconnected (" + std::to_string(components) +
                            " components)");
  }
  return NetworkGraph(n, std::move(edges));
}

/// Path 0-1-...-(n-1) with a uniform edge weight.
inline NetworkGraph build_path(int n, double weight = 1.0) {
  if (n < 1) throw InvalidSizeError("path needs at least one node, got n = " + std::to_string(n));
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  for (int v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, weight, 1});
  return build_from_edges(n, std::move(edges));
}

/// Weighted incidence matrix (n x |E|) with columns +-sqrt(w), so that
/// incidence(g) * incidence(g)^T == laplacian(g).
inline Eigen::MatrixXd incidence(const NetworkGraph& g) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_edges());
  for (int c = 0; c < g.num_edges(); ++c) {
    const auto& e = g.edges()[static_cast<std::size_t>(c)];
    const double s = std::sqrt(e.weight) * e.sign;
    E(e.i, c) = s;
    E(e.j, c) = -s;
  }
  return E;
}

inline Eigen::MatrixXd laplacian(const NetworkGraph& g) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_nodes());
  for (const auto& e : g.edges()) {
    L(e.i, e.i) += e.weight;
    L(e.j, e.j) += e.weight;
    L(e.i, e.j) -= e.weight;
    L(e.j, e.i) -= e.weight;
  }
  return L;
}

/// Laplacian eigenvalues in ascending order.
inline Eigen::VectorXd spectrum(const NetworkGraph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(g), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace freqperf
