#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "prextra/network.hpp"
#include "prextra/problems.hpp"
#include "prextra/regularizer.hpp"
#include "prextra/stiefel.hpp"

namespace prextra {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One row of a trajectory. Metrics that could not be evaluated are NaN.
struct TrajectoryRecord {
  std::size_t k = 0;
  double kkt = kMissing;
  double consensus = kMissing;
  double objective = kMissing;
  double grad_norm = kMissing;  // ||grad f(xbar)||, smooth part only
  double eta_max = 0.0;
  double eta_sq_sum = 0.0;      // sum_i ||eta_{i,k}||^2 (stacked norm)
  double phi = kMissing;
  double wall_ms = 0.0;
  bool kkt_converged = true;
};

/// Euclidean mean of the iterates.
inline Matrix euclidean_mean(const std::vector<Matrix>& xs) {
  Matrix m = Matrix::Zero(xs.front().rows(), xs.front().cols());
  for (const auto& x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

/// xbar = P_M(mean of xs). Throws RankDeficient for degenerate means.
template <typename Manifold = Stiefel>
Matrix manifold_mean(const std::vector<Matrix>& xs) {
  if (xs.empty()) throw Error("manifold_mean: empty input");
  if (std::all_of(xs.begin() + 1, xs.end(), [&](const Matrix& x) { return x == xs.front(); })) return xs.front();
  return Manifold::project(euclidean_mean(xs));
}

inline StiefelPoint manifold_mean(const std::vector<StiefelPoint>& xs) {
  std::vector<Matrix> ms;
  ms.reserve(xs.size());
  for (const auto& x : xs) ms.push_back(x.matrix());
  return StiefelPoint::unchecked(manifold_mean<Stiefel>(ms));
}

/// (1/n) sum_i ||x_i - xbar||^2 for a given mean point.
inline double consensus_error_about(const std::vector<Matrix>& xs, const Matrix& xbar) {
  double acc = 0.0;
  for (const auto& x : xs) acc += (x - xbar).squaredNorm();
  return acc / static_cast<double>(xs.size());
}

template <typename Manifold = Stiefel>
double consensus_error(const std::vector<Matrix>& xs) {
  return consensus_error_about(xs, manifold_mean<Manifold>(xs));
}

/// phi(x) = (1/4) sum_ij w_ij ||x_i - x_j||^2.
inline double consensus_potential(const std::vector<Matrix>& xs, const MixingMatrix& mix) {
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double w = mix.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0 && i != j) acc += w * (xs[i] - xs[j]).squaredNorm();
    }
  return 0.25 * acc;
}

struct KktResult {
  double value = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
  std::size_t free_variables = 0;
};

struct KktOptions {
  double zero_tol = kDefaultZeroTol;
  double tol = 1e-8;  // gradient-mapping norm
  std::size_t max_iters = 100000;
};

/// dist(0, P_T(grad + d r(x))) where grad is a fixed smooth gradient at x.
///
/// Free subgradient coordinates enter a convex least-squares problem over a box
/// (L1) or a product of l2 balls (L21), solved by projected gradient descent
/// with step 1 / L, L the largest eigenvalue of the projected quadratic.
template <typename Manifold = Stiefel>
KktResult stationarity_distance(const Matrix& x, const Matrix& grad, const RegularizerSpec& reg,
                                const KktOptions& opts = {}) {
  const SubdifferentialBox box = subdifferential_at(reg, x, opts.zero_tol);
  const Matrix base = Manifold::tangent(x, grad + box.fixed_part);
  KktResult res;
  res.free_variables = static_cast<std::size_t>(box.free_count());
  if (res.free_variables == 0 || box.radius == 0.0) {
    res.value = base.norm();
    return res;
  }

  // Column c of A is vec(P_T(e_c)) for the c-th free coordinate.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> coords;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (box.free_mask(i, j)) coords.emplace_back(i, j);
  const auto nf = static_cast<Eigen::Index>(coords.size());
  Matrix a(x.size(), nf);
  for (Eigen::Index c = 0; c < nf; ++c) {
    Matrix e = Matrix::Zero(x.rows(), x.cols());
    e(coords[c].first, coords[c].second) = 1.0;
    a.col(c) = Manifold::tangent(x, e).reshaped();
  }
  const Vector b = base.reshaped();
  const Matrix q = a.transpose() * a;
  const Vector atb = a.transpose() * b;
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  if (!(lmax > 1e-300)) {
    res.value = base.norm();
    return res;
  }

  auto project = [&](Vector& z) {
    if (!box.rowwise) {
      z = z.cwiseMax(-box.radius).cwiseMin(box.radius);
      return;
    }
    // coords are grouped row by row
    for (Eigen::Index c = 0; c < nf;) {
      Eigen::Index e = c;
      while (e < nf && coords[e].first == coords[c].first) ++e;
      const double nr = z.segment(c, e - c).norm();
      if (nr > box.radius) z.segment(c, e - c) *= box.radius / nr;
      c = e;
    }
  };

  Vector z = Vector::Zero(nf);
  res.converged = false;
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    Vector zn = z - (q * z + atb) / lmax;
    project(zn);
    const double gm = lmax * (zn - z).norm();
    z = std::move(zn);
    res.iterations = it + 1;
    if (gm <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.value = (b + a * z).norm();
  return res;
}

/// KKT violation ||P_T(grad f(xbar) + d r(xbar))|| at the mean point, with
/// grad f = (1/n) sum_i grad f_i.
template <typename Manifold = Stiefel>
KktResult kkt_violation(const ProblemInstance& inst, const Matrix& xbar, const KktOptions& opts = {}) {
  return stationarity_distance<Manifold>(xbar, global_euclidean_gradient(inst, xbar), inst.reg, opts);
}

struct EpsStationarity {
  bool satisfied = false;
  double max_distance = 0.0;  // max_i ||x_i - xbar||
  double max_kkt = 0.0;       // max_i dist(0, P_{T_{x_i}}(grad f(x_i) + d r(x_i)))
};

template <typename Manifold = Stiefel>
EpsStationarity eps_stationarity(const ProblemInstance& inst, const std::vector<Matrix>& xs, double eps,
                                 const KktOptions& opts = {}) {
  const Matrix xbar = manifold_mean<Manifold>(xs);
  EpsStationarity out;
  for (const auto& x : xs) {
    out.max_distance = std::max(out.max_distance, (x - xbar).norm());
    out.max_kkt = std::max(out.max_kkt, kkt_violation<Manifold>(inst, x, opts).value);
  }
  out.satisfied = out.max_distance <= eps && out.max_kkt <= eps;
  return out;
}

/// max{kkt^2, consensus, sum_i ||eta_i||^2}, the per-iteration composite measure.
inline double composite_measure(const TrajectoryRecord& rec) {
  if (std::isnan(rec.kkt) || std::isnan(rec.consensus) || std::isnan(rec.eta_sq_sum)) return kMissing;
  return std::max({rec.kkt * rec.kkt, rec.consensus, rec.eta_sq_sum});
}

/// Least-squares slope of log M_K against log K over k in [k_min, k_max],
/// where M_K is the running minimum of the composite measure. Records with a
/// missing metric do not update the running minimum; k = 0 is skipped.
inline double rate_slope(const std::vector<TrajectoryRecord>& records, std::size_t k_min, std::size_t k_max) {
  double running = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (const auto& rec : records) {
    const double m = composite_measure(rec);
    if (std::isfinite(m)) running = std::min(running, m);
    if (rec.k < k_min || rec.k > k_max || rec.k == 0) continue;
    if (!std::isfinite(running) || !(running > 0.0)) continue;
    lx.push_back(std::log(static_cast<double>(rec.k)));
    ly.push_back(std::log(running));
  }
  if (lx.size() < 10) throw InsufficientData("rate_slope: fewer than 10 usable points in window");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace prextra
