#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "prextra/types.hpp"

namespace prextra {

/// Undirected simple graph on nodes 0..n-1.
struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j
  std::vector<std::vector<std::size_t>> neighbors;
  /// Seed of the accepted sample (generated graphs only).
  std::uint64_t sample_seed = 0;

  static Graph from_edges(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) {
    Graph g;
    g.n = n;
    g.neighbors.assign(n, {});
    for (auto& [i, j] : edges) {
      if (i == j || i >= n || j >= n) throw Error("Graph: invalid edge");
      if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [i, j] : edges) {
      g.neighbors[i].push_back(j);
      g.neighbors[j].push_back(i);
    }
    for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
    g.edges = std::move(edges);
    return g;
  }

  std::size_t degree(std::size_t i) const { return neighbors[i].size(); }

  double average_degree() const {
    return n == 0 ? 0.0 : 2.0 * static_cast<double>(edges.size()) / static_cast<double>(n);
  }

  bool connected() const {
    if (n <= 1) return true;
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : neighbors[u])
        if (!seen[v]) {
          seen[v] = true;
          ++count;
          q.push(v);
        }
    }
    return count == n;
  }
};

/// Erdos-Renyi G(n, p) conditioned on connectivity: disconnected samples are
/// redrawn with seed + 1, seed + 2, ... until one is connected.
inline Graph generate_er_graph(std::size_t n, double p, std::uint64_t seed) {
  if (n < 1) throw ConfigError("generate_er_graph: n must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("generate_er_graph: p must lie in (0, 1]");
  for (std::uint64_t s = seed;; ++s) {
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (unif(rng) < p) edges.emplace_back(i, j);
    Graph g = Graph::from_edges(n, std::move(edges));
    if (g.connected()) {
      g.sample_seed = s;
      return g;
    }
  }
}

/// Symmetric doubly stochastic W and its EXTRA companion (I + W) / 2.
struct MixingMatrix {
  Matrix W;
  Matrix W_tilde;

  static MixingMatrix from_weights(Matrix w) {
    MixingMatrix m;
    m.W_tilde = 0.5 * (Matrix::Identity(w.rows(), w.cols()) + w);
    m.W = std::move(w);
    return m;
  }

  std::size_t size() const { return static_cast<std::size_t>(W.rows()); }
};

/// Metropolis-Hastings weights w_ij = 1 / (max(deg_i, deg_j) + 1) on edges,
/// diagonal set to preserve row sums.
inline MixingMatrix metropolis_weights(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n);
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [i, j] : g.edges) {
    const double wij = 1.0 / (static_cast<double>(std::max(g.degree(i), g.degree(j))) + 1.0);
    w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wij;
    w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = wij;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix::from_weights(std::move(w));
}

/// ||W - J||_2 with J = 11^T / n.
inline double spectral_gap(const MixingMatrix& m) {
  const auto n = m.W.rows();
  if (n <= 1) return 0.0;
  const Matrix dev = m.W - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::JacobiSVD<Matrix> svd(dev);
  return svd.singularValues()(0);
}

/// Measured deviations of W from the mixing-matrix invariants.
struct MixingDiagnostics {
  double asymmetry = 0.0;        // max |w_ij - w_ji|
  double row_sum_error = 0.0;    // max |sum_j w_ij - 1|
  double col_sum_error = 0.0;    // max |sum_i w_ij - 1|
  double min_entry = 0.0;
  double min_diagonal = 0.0;
  double gap = 0.0;
  double tilde_error = 0.0;      // max |W_tilde - (I + W) / 2|

  bool ok(double tol = 1e-14) const {
    return asymmetry <= tol && row_sum_error <= tol && col_sum_error <= tol && min_entry >= 0.0 &&
           min_diagonal > 0.0 && gap < 1.0 && tilde_error <= tol;
  }
};

inline MixingDiagnostics diagnose(const MixingMatrix& m) {
  MixingDiagnostics d;
  const auto n = m.W.rows();
  d.asymmetry = (m.W - m.W.transpose()).cwiseAbs().maxCoeff();
  d.row_sum_error = (m.W.rowwise().sum().array() - 1.0).abs().maxCoeff();
  d.col_sum_error = (m.W.colwise().sum().array() - 1.0).abs().maxCoeff();
  d.min_entry = m.W.minCoeff();
  d.min_diagonal = m.W.diagonal().minCoeff();
  d.gap = spectral_gap(m);
  d.tilde_error = (m.W_tilde - 0.5 * (Matrix::Identity(n, n) + m.W)).cwiseAbs().maxCoeff();
  return d;
}

}  // namespace prextra
