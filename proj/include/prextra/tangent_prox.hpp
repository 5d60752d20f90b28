#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "prextra/regularizer.hpp"
#include "prextra/stiefel.hpp"

namespace prextra {

// Tangent-space proximal subproblem
//
//   eta* = argmin_{eta in T_y St}  ||eta||^2 / (2 tau) + r(y + eta).
//
// With a symmetric multiplier L for the constraint y^T eta + eta^T y = 0 the
// Lagrangian is minimized by
//
//   eta(L) = prox_{tau r}(y - 2 tau y L) - y,
//
// and the dual residual E(L) = y^T eta(L) + eta(L)^T y is the gradient of the
// (concave) dual function. The solver drives E to zero with a semismooth
// Newton method, using the Clarke derivative of the prox as generalized
// Jacobian, and falls back to dual gradient ascent L <- L + E / (4 tau).

enum class SubproblemMethod { SemismoothNewton, FixedPoint };

inline std::string to_string(SubproblemMethod m) {
  return m == SubproblemMethod::SemismoothNewton ? "semismooth-newton" : "fixed-point";
}

struct SubproblemOptions {
  double tol = 1e-10;
  int newton_max_iters = 100;
  int fixed_point_max_iters = 10000;
  /// Initial multiplier; zero when empty.
  std::optional<Matrix> warm_start;
};

struct SubproblemResult {
  TangentVector eta;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
  SubproblemMethod method_used = SubproblemMethod::SemismoothNewton;
  Matrix multiplier;
};

struct DualResidual {
  AmbientMatrix eta_candidate;
  Matrix residual_matrix;
};

inline DualResidual dual_residual(const StiefelPoint& y, const RegularizerSpec& reg, double tau,
                                  const Eigen::Ref<const Matrix>& multiplier) {
  const Matrix& ym = y.matrix();
  DualResidual out;
  out.eta_candidate = euclidean_prox(reg, ym - 2.0 * tau * ym * multiplier, tau) - ym;
  const Matrix yt_eta = ym.transpose() * out.eta_candidate;
  out.residual_matrix = yt_eta + yt_eta.transpose();
  return out;
}

namespace detail {

/// Clarke generalized derivative of prox_{tau r} at v applied to w.
inline Matrix prox_derivative(const RegularizerSpec& reg, const Matrix& v, double tau, const Matrix& w) {
  const double thr = tau * reg.lambda;
  switch (reg.kind) {
    case RegKind::Zero: return w;
    case RegKind::L1: return (v.array().abs() > thr).select(w, 0.0);
    case RegKind::L21: {
      Matrix out = Matrix::Zero(w.rows(), w.cols());
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double nr = v.row(i).norm();
        if (nr <= thr) continue;
        const double proj = v.row(i).dot(w.row(i));
        out.row(i) = (1.0 - thr / nr) * w.row(i) + (thr * proj / (nr * nr * nr)) * v.row(i);
      }
      return out;
    }
  }
  return w;
}

/// Orthonormal basis of the r x r symmetric matrices (Frobenius inner product).
inline std::vector<Matrix> symmetric_basis(Eigen::Index r) {
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(r * (r + 1) / 2));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = a; b < r; ++b) {
      Matrix e = Matrix::Zero(r, r);
      if (a == b) {
        e(a, a) = 1.0;
      } else {
        e(a, b) = inv_sqrt2;
        e(b, a) = inv_sqrt2;
      }
      basis.push_back(std::move(e));
    }
  return basis;
}

inline double subproblem_objective(const Matrix& y, const RegularizerSpec& reg, double tau, const Matrix& eta) {
  return eta.squaredNorm() / (2.0 * tau) + value(reg, y + eta);
}

}  // namespace detail

/// Solves the tangent-space proximal subproblem at y. Throws NoConvergence
/// when neither method reaches the tolerance and Lemma4Violation when the
/// returned direction breaks ||eta|| <= 2 tau L_r.
inline SubproblemResult solve_subproblem(const StiefelPoint& y, const RegularizerSpec& reg, double tau,
                                         const SubproblemOptions& opts = {}) {
  if (!(tau > 0.0)) throw Error("solve_subproblem: tau must be positive");
  if (!(opts.tol > 0.0)) throw Error("solve_subproblem: tol must be positive");
  const Matrix& ym = y.matrix();
  const Eigen::Index r = ym.cols();

  SubproblemResult res;
  if (reg.inactive()) {
    res.eta = TangentVector(Matrix::Zero(ym.rows(), r), y);
    res.multiplier = Matrix::Zero(r, r);
    return res;
  }

  Matrix lam = opts.warm_start ? sym(*opts.warm_start) : Matrix::Zero(r, r);
  DualResidual cur = dual_residual(y, reg, tau, lam);
  double enorm = cur.residual_matrix.norm();
  int iters = 0;
  bool done = enorm <= opts.tol;

  const auto basis = detail::symmetric_basis(r);
  const auto m = static_cast<Eigen::Index>(basis.size());
  for (int it = 0; !done && it < opts.newton_max_iters; ++it) {
    ++iters;
    const Matrix v = ym - 2.0 * tau * ym * lam;
    Matrix hess(m, m);
    Vector rhs(m);
    for (Eigen::Index c = 0; c < m; ++c) {
      const Matrix deta = detail::prox_derivative(reg, v, tau, -2.0 * tau * ym * basis[c]);
      const Matrix yt = ym.transpose() * deta;
      const Matrix de = yt + yt.transpose();
      for (Eigen::Index q = 0; q < m; ++q) hess(q, c) = -(de.cwiseProduct(basis[q])).sum();
      rhs(c) = cur.residual_matrix.cwiseProduct(basis[c]).sum();
    }
    hess = 0.5 * (hess + hess.transpose());
    const double shift = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    hess.diagonal().array() += shift;
    const Vector dir = hess.ldlt().solve(rhs);
    if (!dir.allFinite()) break;
    Matrix step = Matrix::Zero(r, r);
    for (Eigen::Index c = 0; c < m; ++c) step += dir(c) * basis[c];

    bool accepted = false;
    double t = 1.0;
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      Matrix trial = lam + t * step;
      DualResidual next = dual_residual(y, reg, tau, trial);
      const double nn = next.residual_matrix.norm();
      if (nn <= (1.0 - 1e-4 * t) * enorm) {
        lam = std::move(trial);
        cur = std::move(next);
        enorm = nn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    done = enorm <= opts.tol;
  }

  res.method_used = SubproblemMethod::SemismoothNewton;
  if (!done) {
    res.method_used = SubproblemMethod::FixedPoint;
    const double beta = 1.0 / (4.0 * tau);
    for (int it = 0; it < opts.fixed_point_max_iters && !done; ++it) {
      ++iters;
      lam += beta * cur.residual_matrix;
      cur = dual_residual(y, reg, tau, lam);
      enorm = cur.residual_matrix.norm();
      done = enorm <= opts.tol;
    }
  }
  if (!done) {
    throw NoConvergence("solve_subproblem: dual residual " + std::to_string(enorm) + " above tol " +
                        std::to_string(opts.tol) + " after " + std::to_string(iters) +
                        " inner iterations (tau = " + std::to_string(tau) + ")");
  }

  // Remove the O(tol) normal component left by the inexact dual solve.
  Matrix eta = tangent_projection(ym, cur.eta_candidate);

  const double bound = 2.0 * tau * lipschitz_constant(reg, ym.rows(), r);
  if (eta.norm() > bound + 1e-9) {
    throw Lemma4Violation("solve_subproblem: ||eta|| = " + std::to_string(eta.norm()) +
                          " exceeds 2 tau L_r = " + std::to_string(bound));
  }
  const double g0 = value(reg, ym);
  const double geta = detail::subproblem_objective(ym, reg, tau, eta);
  if (g0 - geta < eta.squaredNorm() / (2.0 * tau) - 1e-9 * std::max(1.0, std::abs(g0))) {
    throw NoConvergence("solve_subproblem: strong-convexity descent check failed");
  }

  res.eta = TangentVector(std::move(eta), y);
  res.kkt_residual = enorm;
  res.inner_iterations = iters;
  res.multiplier = std::move(lam);
  return res;
}

}  // namespace prextra
