#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "prextra/types.hpp"

namespace prextra {

enum class RegKind { Zero, L1, L21 };

inline std::string to_string(RegKind k) {
  switch (k) {
    case RegKind::Zero: return "zero";
    case RegKind::L1: return "l1";
    case RegKind::L21: return "l21";
  }
  return "?";
}

/// r(x) = lambda * ||x||_1, lambda * sum_i ||row_i(x)||_2, or 0.
struct RegularizerSpec {
  RegKind kind = RegKind::Zero;
  double lambda = 0.0;

  static RegularizerSpec zero() { return {}; }
  static RegularizerSpec l1(double lambda) { return make(RegKind::L1, lambda); }
  static RegularizerSpec l21(double lambda) { return make(RegKind::L21, lambda); }

  static RegularizerSpec make(RegKind kind, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("regularizer: lambda must be >= 0");
    if (kind == RegKind::Zero) return {};
    return {kind, lambda};
  }

  /// True when r vanishes identically.
  bool inactive() const noexcept { return kind == RegKind::Zero || lambda == 0.0; }
};

inline double value(const RegularizerSpec& reg, const Eigen::Ref<const Matrix>& x) {
  switch (reg.kind) {
    case RegKind::Zero: return 0.0;
    case RegKind::L1: return reg.lambda * x.cwiseAbs().sum();
    case RegKind::L21: return reg.lambda * x.rowwise().norm().sum();
  }
  return 0.0;
}

/// prox_{t r}(v): soft-thresholding (L1), row shrinkage (L21) or identity.
inline Matrix euclidean_prox(const RegularizerSpec& reg, const Eigen::Ref<const Matrix>& v, double t) {
  if (!(t >= 0.0)) throw Error("euclidean_prox: step must be non-negative");
  const double thr = t * reg.lambda;
  switch (reg.kind) {
    case RegKind::Zero: return v;
    case RegKind::L1: {
      Matrix p(v.rows(), v.cols());
      for (Eigen::Index j = 0; j < v.cols(); ++j)
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          const double a = std::abs(v(i, j)) - thr;
          p(i, j) = a > 0.0 ? std::copysign(a, v(i, j)) : 0.0;
        }
      return p;
    }
    case RegKind::L21: {
      Matrix p(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double nr = v.row(i).norm();
        const double scale = nr > thr ? 1.0 - thr / nr : 0.0;
        p.row(i) = scale * v.row(i);
      }
      return p;
    }
  }
  return v;
}

/// Frobenius-norm Lipschitz constant of r on R^{d x r}.
inline double lipschitz_constant(const RegularizerSpec& reg, Eigen::Index d, Eigen::Index r) {
  switch (reg.kind) {
    case RegKind::Zero: return 0.0;
    case RegKind::L1: return reg.lambda * std::sqrt(static_cast<double>(d * r));
    case RegKind::L21: return reg.lambda * std::sqrt(static_cast<double>(d));
  }
  return 0.0;
}

inline constexpr double kDefaultZeroTol = 1e-10;

/// The subdifferential of r at x, described as a fixed part plus a set of
/// free entries (L1, box of half-width radius) or free rows (L21, l2 ball).
struct SubdifferentialBox {
  Matrix fixed_part;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> free_mask;
  double radius = 0.0;
  bool rowwise = false;

  Eigen::Index free_count() const { return free_mask.count(); }

  /// Whether g lies in the set, up to tol.
  bool contains(const Eigen::Ref<const Matrix>& g, double tol) const {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (rowwise && free_mask.rows() > 0 && free_mask.cols() > 0 && free_mask(i, 0)) {
        if (g.row(i).norm() > radius + tol) return false;
        continue;
      }
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        if (free_mask(i, j)) {
          if (std::abs(g(i, j)) > radius + tol) return false;
        } else if (std::abs(g(i, j) - fixed_part(i, j)) > tol) {
          return false;
        }
      }
    }
    return true;
  }
};

inline SubdifferentialBox subdifferential_at(const RegularizerSpec& reg, const Eigen::Ref<const Matrix>& x,
                                             double zero_tol = kDefaultZeroTol) {
  if (!(zero_tol >= 0.0)) throw Error("subdifferential_at: zero_tol must be >= 0");
  SubdifferentialBox box;
  box.fixed_part = Matrix::Zero(x.rows(), x.cols());
  box.free_mask.setConstant(x.rows(), x.cols(), false);
  box.radius = reg.kind == RegKind::Zero ? 0.0 : reg.lambda;
  box.rowwise = reg.kind == RegKind::L21;
  switch (reg.kind) {
    case RegKind::Zero: break;
    case RegKind::L1:
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          if (std::abs(x(i, j)) > zero_tol)
            box.fixed_part(i, j) = std::copysign(reg.lambda, x(i, j));
          else
            box.free_mask(i, j) = true;
        }
      break;
    case RegKind::L21:
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double nr = x.row(i).norm();
        if (nr > zero_tol)
          box.fixed_part.row(i) = (reg.lambda / nr) * x.row(i);
        else
          box.free_mask.row(i).setConstant(true);
      }
      break;
  }
  return box;
}

}  // namespace prextra
