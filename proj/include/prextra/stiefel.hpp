#pragma once

#include <cmath>
#include <limits>

#include "prextra/types.hpp"

namespace prextra {

/// Smallest singular value accepted by the polar projection.
inline constexpr double kRankTolerance = 1e-8;

/// Tolerance of the orthonormality residual that defines a feasible point.
inline constexpr double kFeasibilityTolerance = 1e-10;

/// ||v^T v - I_r||_F
inline double orthonormality_residual(const Eigen::Ref<const Matrix>& v) {
  const auto r = v.cols();
  return (v.transpose() * v - Matrix::Identity(r, r)).norm();
}

/// sym(A) = (A + A^T) / 2
inline Matrix sym(const Eigen::Ref<const Matrix>& a) { return 0.5 * (a + a.transpose()); }

/// A point on St(d, r): a d x r matrix with orthonormal columns.
///
/// Construct through project_to_manifold() or StiefelPoint::from_orthonormal(),
/// which rejects inputs violating the orthonormality invariant.
class StiefelPoint {
 public:
  StiefelPoint() = default;

  static StiefelPoint from_orthonormal(Matrix data, double tol = kFeasibilityTolerance) {
    if (data.cols() > data.rows()) throw Error("StiefelPoint: requires r <= d");
    const double res = orthonormality_residual(data);
    if (!(res <= tol)) {
      throw Error("StiefelPoint: orthonormality residual " + std::to_string(res) +
                  " exceeds tolerance");
    }
    return StiefelPoint(std::move(data));
  }

  /// Wraps without checking; only for outputs of the polar projection.
  static StiefelPoint unchecked(Matrix data) { return StiefelPoint(std::move(data)); }

  const Matrix& matrix() const noexcept { return data_; }
  Eigen::Index d() const noexcept { return data_.rows(); }
  Eigen::Index r() const noexcept { return data_.cols(); }
  double residual() const { return orthonormality_residual(data_); }

 private:
  explicit StiefelPoint(Matrix data) : data_(std::move(data)) {}
  Matrix data_;
};

/// An element of the tangent space T_x St at its anchor x.
class TangentVector {
 public:
  TangentVector() = default;
  TangentVector(Matrix data, StiefelPoint anchor)
      : data_(std::move(data)), anchor_(std::move(anchor)) {}

  const Matrix& matrix() const noexcept { return data_; }
  const StiefelPoint& anchor() const noexcept { return anchor_; }
  double norm() const { return data_.norm(); }

  /// ||x^T eta + eta^T x||_F
  double tangency_residual() const {
    const Matrix xt_eta = anchor_.matrix().transpose() * data_;
    return (xt_eta + xt_eta.transpose()).norm();
  }

 private:
  Matrix data_;
  StiefelPoint anchor_;
};

/// Nearest point on St(d, r) in Frobenius norm: the polar factor U V^T of the
/// thin SVD v = U S V^T. Throws RankDeficient when sigma_min(v) < 1e-8.
inline StiefelPoint project_to_manifold(const Eigen::Ref<const Matrix>& v) {
  if (v.cols() > v.rows()) throw Error("project_to_manifold: requires r <= d");
  Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double sigma_min = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  if (!(sigma_min >= kRankTolerance)) throw RankDeficient(sigma_min, "project_to_manifold");
  return StiefelPoint::unchecked(svd.matrixU() * svd.matrixV().transpose());
}

/// Orthogonal projection onto T_x St: u - x sym(x^T u).
inline Matrix tangent_projection(const Eigen::Ref<const Matrix>& x,
                                 const Eigen::Ref<const Matrix>& u) {
  return u - x * sym(x.transpose() * u);
}

inline TangentVector project_to_tangent(const StiefelPoint& x, const Eigen::Ref<const Matrix>& u) {
  return TangentVector(tangent_projection(x.matrix(), u), x);
}

/// ||P_M(x + u) - x - P_T(u)|| / ||u||^2, the second-order remainder of the
/// projection. Finite values over small u witness a finite curvature constant.
inline double lemma1_ratio(const StiefelPoint& x, const Eigen::Ref<const Matrix>& u) {
  const double nu = u.norm();
  if (nu == 0.0) throw ZeroDirection("lemma1_ratio: zero direction");
  const Matrix& xm = x.matrix();
  const StiefelPoint p = project_to_manifold(xm + u);
  return (p.matrix() - xm - tangent_projection(xm, u)).norm() / (nu * nu);
}

// Manifold policies. Metrics and consensus routines are written against this
// small interface; Stiefel is the only curved manifold shipped. EuclideanSpace
// is the trivial case used for PG-EXTRA diagnostics.

struct Stiefel {
  static constexpr const char* name = "stiefel";
  static Matrix project(const Eigen::Ref<const Matrix>& v) { return project_to_manifold(v).matrix(); }
  static Matrix tangent(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& u) {
    return tangent_projection(x, u);
  }
};

struct EuclideanSpace {
  static constexpr const char* name = "euclidean";
  static Matrix project(const Eigen::Ref<const Matrix>& v) { return v; }
  static Matrix tangent(const Eigen::Ref<const Matrix>&, const Eigen::Ref<const Matrix>& u) {
    return u;
  }
};

}  // namespace prextra
