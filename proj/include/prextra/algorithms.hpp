#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "prextra/network.hpp"
#include "prextra/problems.hpp"
#include "prextra/regularizer.hpp"
#include "prextra/stiefel.hpp"
#include "prextra/tangent_prox.hpp"

namespace prextra {

struct AlgorithmConfig {
  double alpha = 1e-3;
  double tau = 1e-3;
  std::size_t max_iters = 3000;
  /// Consensus stop threshold; 0 disables the stop.
  double eps_cons = 1e-12;
  double subproblem_tol = 1e-10;
  bool warm_start = false;
  /// DRSM stepsize beta_k = beta0 / sqrt(k + 1).
  double drsm_beta0 = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !(tau > 0.0) || !(subproblem_tol > 0.0))
      throw ConfigError("AlgorithmConfig: alpha, tau and subproblem_tol must be positive");
    if (!(eps_cons >= 0.0) || !(drsm_beta0 >= 0.0))
      throw ConfigError("AlgorithmConfig: eps_cons and drsm_beta0 must be non-negative");
  }
};

/// Riemannian gradient grad f_i(x) = P_T(grad f_i(x)).
inline Matrix local_riemannian_gradient(const ProblemInstance& inst, std::size_t i, const StiefelPoint& x) {
  return tangent_projection(x.matrix(), local_euclidean_gradient(inst, i, x.matrix()));
}

// ---------------------------------------------------------------------------
// PR-EXTRA

/// Per-node state of PR-EXTRA at the start of iteration k.
struct NodeState {
  StiefelPoint x;       // x_{i,k}
  StiefelPoint x_prev;  // x_{i,k-1}; equals x before the first step
  AmbientMatrix s;      // s_{i,k-1} before the s-update of iteration k
  AmbientMatrix g_prev; // grad f_i(x_{i,k-1})
  StiefelPoint y;       // y_{i,k-1}, last consensus point
  Matrix dual;          // last subproblem multiplier (warm start)
};

/// Broadcasts x0 and sets s_{i,0} = -alpha grad f_i(x0).
inline std::vector<NodeState> pr_extra_init(const ProblemInstance& inst, const StiefelPoint& x0,
                                            const AlgorithmConfig& cfg) {
  std::vector<NodeState> states;
  states.reserve(inst.n());
  for (std::size_t i = 0; i < inst.n(); ++i) {
    NodeState st;
    st.x = x0;
    st.x_prev = x0;
    st.g_prev = local_riemannian_gradient(inst, i, x0);
    st.s = -cfg.alpha * st.g_prev;
    st.y = x0;
    st.dual = Matrix::Zero(x0.r(), x0.r());
    states.push_back(std::move(st));
  }
  return states;
}

namespace detail {
// Self term first, then neighbours in index order, so nodes holding equal data
// produce bitwise equal sums regardless of their position.
template <typename Get>
void accumulate_row(Matrix& acc, const Matrix& w, std::size_t i, Get&& get) {
  const auto ii = static_cast<Eigen::Index>(i);
  if (w(ii, ii) != 0.0) acc += w(ii, ii) * get(i);
  for (std::size_t j = 0; j < static_cast<std::size_t>(w.cols()); ++j) {
    const double c = w(ii, static_cast<Eigen::Index>(j));
    if (j != i && c != 0.0) acc += c * get(j);
  }
}
}  // namespace detail

struct PrExtraStep {
  std::vector<NodeState> states;
  std::vector<double> eta_norms;
  double max_residual = 0.0;  // orthonormality residual over all new x and y
  int max_inner_iterations = 0;
  bool fallback_used = false;
};

/// One synchronous round of PR-EXTRA. Every read of a neighbor's x uses the
/// round-k snapshot held in `states`; the s-update uses the previous round's
/// snapshot x_prev, so one exchange per iteration suffices.
inline PrExtraStep pr_extra_step(const std::vector<NodeState>& states, const MixingMatrix& mix,
                                 const ProblemInstance& inst, const AlgorithmConfig& cfg, std::size_t k) {
  const std::size_t n = states.size();
  if (n != inst.n() || mix.size() != n) throw Error("pr_extra_step: node count mismatch");
  PrExtraStep out;
  out.states.resize(n);
  out.eta_norms.resize(n);
  const double bound = 2.0 * cfg.tau * lipschitz_constant(inst.reg, inst.d, inst.r);
  const Matrix diff = mix.W - mix.W_tilde;

  for (std::size_t i = 0; i < n; ++i) {
    const NodeState& cur = states[i];
    NodeState& next = out.states[i];

    // (a) EXTRA correction
    const Matrix grad = local_riemannian_gradient(inst, i, cur.x);
    next.s = cur.s;
    if (k > 0) {
      detail::accumulate_row(next.s, diff, i, [&](std::size_t j) -> const Matrix& { return states[j].x_prev.matrix(); });
      next.s -= cfg.alpha * (grad - cur.g_prev);
    }

    // (b) projected consensus
    Matrix mixed = next.s;
    detail::accumulate_row(mixed, mix.W, i, [&](std::size_t j) -> const Matrix& { return states[j].x.matrix(); });
    next.y = project_to_manifold(mixed);

    // (c) tangent-space proximal step
    SubproblemOptions sopts;
    sopts.tol = cfg.subproblem_tol;
    if (cfg.warm_start) sopts.warm_start = cur.dual;
    SubproblemResult sub = solve_subproblem(next.y, inst.reg, cfg.tau, sopts);
    out.eta_norms[i] = sub.eta.norm();
    if (out.eta_norms[i] > bound + 1e-9) {
      throw Lemma4Violation("pr_extra_step: node " + std::to_string(i) + " ||eta|| exceeds 2 tau L_r");
    }
    out.max_inner_iterations = std::max(out.max_inner_iterations, sub.inner_iterations);
    out.fallback_used = out.fallback_used || sub.method_used == SubproblemMethod::FixedPoint;
    next.dual = std::move(sub.multiplier);

    // (d) return to the manifold
    next.x = project_to_manifold(next.y.matrix() + sub.eta.matrix());
    next.x_prev = cur.x;
    next.g_prev = grad;

    out.max_residual = std::max({out.max_residual, next.x.residual(), next.y.residual()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// PG-EXTRA (Euclidean reference)

/// Stacked per-node iterates of PG-EXTRA. The coupled form uses (x, x_prev, y);
/// the decoupled form uses (x, s, y).
struct EuclideanExtraState {
  std::vector<Matrix> x;
  std::vector<Matrix> x_prev;
  std::vector<Matrix> s;
  std::vector<Matrix> y;
};

namespace detail {
inline std::vector<Matrix> mix_rows(const Matrix& w, const std::vector<Matrix>& xs) {
  std::vector<Matrix> out(xs.size(), Matrix::Zero(xs.front().rows(), xs.front().cols()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    accumulate_row(out[i], w, i, [&](std::size_t j) -> const Matrix& { return xs[j]; });
  return out;
}
}  // namespace detail

/// y_0 = W x_0 - alpha grad f(x_0), x_1 = prox(y_0).
inline EuclideanExtraState pg_extra_coupled_init(const ProblemInstance& inst, const MixingMatrix& mix,
                                                 const std::vector<Matrix>& x0, double alpha) {
  EuclideanExtraState st;
  st.x_prev = x0;
  st.y = detail::mix_rows(mix.W, x0);
  st.x.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    st.y[i] -= alpha * local_euclidean_gradient(inst, i, x0[i]);
    st.x[i] = euclidean_prox(inst.reg, st.y[i], alpha);
  }
  return st;
}

/// y_{k+1} = y_k - alpha [grad f(x_{k+1}) - grad f(x_k)] + W x_{k+1} - W~ x_k,
/// x_{k+2} = prox_{alpha r}(y_{k+1}).
inline EuclideanExtraState pg_extra_coupled_step(const EuclideanExtraState& st, const MixingMatrix& mix,
                                                 const ProblemInstance& inst, double alpha) {
  EuclideanExtraState next;
  const auto wx = detail::mix_rows(mix.W, st.x);
  const auto wtx = detail::mix_rows(mix.W_tilde, st.x_prev);
  next.y.resize(st.x.size());
  next.x.resize(st.x.size());
  for (std::size_t i = 0; i < st.x.size(); ++i) {
    next.y[i] = st.y[i] -
                alpha * (local_euclidean_gradient(inst, i, st.x[i]) - local_euclidean_gradient(inst, i, st.x_prev[i])) +
                wx[i] - wtx[i];
    next.x[i] = euclidean_prox(inst.reg, next.y[i], alpha);
  }
  next.x_prev = st.x;
  return next;
}

/// s_0 = -alpha grad f(x_0), y_0 = W x_0 + s_0.
inline EuclideanExtraState pg_extra_decoupled_init(const ProblemInstance& inst, const MixingMatrix& mix,
                                                   const std::vector<Matrix>& x0, double alpha) {
  EuclideanExtraState st;
  st.x = x0;
  st.y = detail::mix_rows(mix.W, x0);
  st.s.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    st.s[i] = -alpha * local_euclidean_gradient(inst, i, x0[i]);
    st.y[i] += st.s[i];
  }
  return st;
}

/// x_{k+1} = prox(y_k); s_{k+1} = s_k + (W - W~) x_k - alpha [grad f(x_{k+1}) - grad f(x_k)];
/// y_{k+1} = W x_{k+1} + s_{k+1}.
inline EuclideanExtraState pg_extra_decoupled_step(const EuclideanExtraState& st, const MixingMatrix& mix,
                                                   const ProblemInstance& inst, double alpha) {
  EuclideanExtraState next;
  const std::size_t n = st.x.size();
  next.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) next.x[i] = euclidean_prox(inst.reg, st.y[i], alpha);
  const auto dx = detail::mix_rows(mix.W - mix.W_tilde, st.x);
  const auto wx = detail::mix_rows(mix.W, next.x);
  next.s.resize(n);
  next.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    next.s[i] = st.s[i] + dx[i] -
                alpha * (local_euclidean_gradient(inst, i, next.x[i]) - local_euclidean_gradient(inst, i, st.x[i]));
    next.y[i] = wx[i] + next.s[i];
  }
  next.x_prev = st.x;
  return next;
}

// ---------------------------------------------------------------------------
// DRSM baseline (reconstructed): projected Riemannian subgradient consensus
// with diminishing stepsize.

inline double drsm_stepsize(double beta0, std::size_t k) { return beta0 / std::sqrt(static_cast<double>(k) + 1.0); }

inline std::vector<StiefelPoint> drsm_step(const std::vector<StiefelPoint>& xs, const MixingMatrix& mix,
                                           const ProblemInstance& inst, std::size_t k, double beta0) {
  const std::size_t n = xs.size();
  if (n != inst.n() || mix.size() != n) throw Error("drsm_step: node count mismatch");
  const double beta = drsm_stepsize(beta0, k);
  std::vector<StiefelPoint> next;
  next.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix& xi = xs[i].matrix();
    Matrix mixed = Matrix::Zero(xi.rows(), xi.cols());
    detail::accumulate_row(mixed, mix.W, i, [&](std::size_t j) -> const Matrix& { return xs[j].matrix(); });
    const Matrix sub = subdifferential_at(inst.reg, xi).fixed_part;
    mixed -= beta * tangent_projection(xi, local_euclidean_gradient(inst, i, xi) + sub);
    next.push_back(project_to_manifold(mixed));
  }
  return next;
}

}  // namespace prextra
