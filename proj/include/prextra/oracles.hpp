#pragma once

// Brute-force reference computations. None of these call the routine they are
// used to check: the nearest-point oracle retracts with QR instead of the polar
// factor, the tangent oracle builds an explicit basis, the subproblem oracle
// runs projected subgradient steps instead of the dual Newton method.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "prextra/problems.hpp"
#include "prextra/regularizer.hpp"
#include "prextra/types.hpp"

namespace prextra::oracle {

/// Q factor of a thin Householder QR with sign fixed so that diag(R) > 0.
inline Matrix qr_retract(const Matrix& v) {
  Eigen::HouseholderQR<Matrix> qr(v);
  Matrix q = qr.householderQ() * Matrix::Identity(v.rows(), v.cols());
  const Matrix rr = qr.matrixQR().topRows(v.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    if (rr(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

/// Orthonormal basis of T_x St(d, r): x * skew units and x_perp * units.
inline std::vector<Matrix> tangent_basis(const Matrix& x) {
  const Eigen::Index d = x.rows(), r = x.cols();
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix full_q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix x_perp = full_q.rightCols(d - r);
  std::vector<Matrix> basis;
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = a + 1; b < r; ++b) {
      Matrix om = Matrix::Zero(r, r);
      om(a, b) = s;
      om(b, a) = -s;
      basis.push_back(x * om);
    }
  for (Eigen::Index c = 0; c < d - r; ++c)
    for (Eigen::Index b = 0; b < r; ++b) {
      Matrix k = Matrix::Zero(d - r, r);
      k(c, b) = 1.0;
      basis.push_back(x_perp * k);
    }
  return basis;
}

/// Least-squares projection of u onto span(tangent_basis(x)).
inline Matrix tangent_projection_by_basis(const Matrix& x, const Matrix& u) {
  Matrix out = Matrix::Zero(u.rows(), u.cols());
  for (const auto& b : tangent_basis(x)) out += b.cwiseProduct(u).sum() * b;
  return out;
}

/// argmin_{y in St} ||y - v||_F by Riemannian gradient ascent of tr(y^T v)
/// with QR retraction from `restarts` random starts; best result returned.
inline Matrix nearest_stiefel_point(const Matrix& v, int restarts, std::uint64_t seed, int iters = 4000) {
  std::mt19937_64 rng(seed);
  const double step = 0.5 / std::max(1e-12, v.norm());
  Matrix best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int s = 0; s < restarts; ++s) {
    Matrix y = qr_retract(gaussian_matrix(v.rows(), v.cols(), rng));
    for (int it = 0; it < iters; ++it) {
      const Matrix g = v - y * (0.5 * (y.transpose() * v + v.transpose() * y));
      if (g.norm() < 1e-14) break;
      y = qr_retract(y + step * g);
    }
    const double dist = (y - v).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = y;
    }
  }
  return best;
}

/// Projected subgradient method for min_{eta in T_y} ||eta||^2/(2 tau) + r(y + eta)
/// with diminishing steps t_k = tau / (k + 1); after each step eta is
/// re-projected onto T_y through the explicit basis.
inline Matrix subproblem_by_subgradient(const Matrix& y, const RegularizerSpec& reg, double tau,
                                        std::size_t iters = 100000) {
  const auto basis = tangent_basis(y);
  auto project = [&](const Matrix& u) {
    Matrix out = Matrix::Zero(u.rows(), u.cols());
    for (const auto& b : basis) out += b.cwiseProduct(u).sum() * b;
    return out;
  };
  auto subgradient = [&](const Matrix& z) {
    Matrix g = Matrix::Zero(z.rows(), z.cols());
    if (reg.kind == RegKind::L1) {
      for (Eigen::Index i = 0; i < z.size(); ++i) g(i) = z(i) > 0 ? reg.lambda : (z(i) < 0 ? -reg.lambda : 0.0);
    } else if (reg.kind == RegKind::L21) {
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double nr = z.row(i).norm();
        if (nr > 0) g.row(i) = (reg.lambda / nr) * z.row(i);
      }
    }
    return g;
  };
  // The basis projection is linear, so project the subgradient directly.
  Matrix eta = Matrix::Zero(y.rows(), y.cols());
  for (std::size_t k = 0; k < iters; ++k) {
    const double t = tau / (static_cast<double>(k) + 1.0);
    eta = project(eta - t * (eta / tau + subgradient(y + eta)));
  }
  return eta;
}

/// Central finite-difference gradient of a scalar matrix function.
inline Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                         double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Centralized proximal gradient on (1/n) sum_i f_i + r for a Euclidean
/// instance, with step 1 / L, L = ||(1/n) sum_i G_i||_2.
inline Matrix centralized_prox_gradient(const ProblemInstance& inst, std::size_t iters = 100000) {
  Matrix gbar = inst.total_gram() / static_cast<double>(inst.n());
  Matrix cbar = Matrix::Zero(inst.d, inst.r);
  for (const auto& c : inst.linear) cbar += c;
  cbar /= static_cast<double>(inst.n());
  const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(gbar, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double t = 1.0 / lip;
  Matrix x = Matrix::Zero(inst.d, inst.r);
  for (std::size_t k = 0; k < iters; ++k) {
    const Matrix grad = inst.curvature * gbar * x - cbar;
    // soft-threshold written out to stay independent of euclidean_prox
    const Matrix v = x - t * grad;
    const double thr = t * inst.reg.lambda;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double a = std::abs(v(i)) - thr;
      x(i) = a > 0 ? (v(i) > 0 ? a : -a) : 0.0;
    }
  }
  return x;
}

}  // namespace prextra::oracle
