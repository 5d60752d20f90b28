#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prextra/regularizer.hpp"
#include "prextra/stiefel.hpp"

namespace prextra {

enum class ProblemKind { SPCA, CISE, Quadratic };

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::SPCA: return "SPCA";
    case ProblemKind::CISE: return "CISE";
    case ProblemKind::Quadratic: return "QUADRATIC";
  }
  return "?";
}

enum class SpectrumKind { Geometric, HalfGeometric };

/// Data recipe: A = U diag(xi^j) V^T (or xi^{j/2}) from the thin SVD of a
/// seeded Gaussian m x d matrix B.
struct SpectralRecipe {
  std::size_t m = 8000;
  std::size_t d = 10;
  double xi = 0.8;
  SpectrumKind exponent_kind = SpectrumKind::Geometric;
  std::uint64_t seed = 0;
};

inline Vector target_spectrum(std::size_t d, double xi, SpectrumKind kind) {
  Vector s(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const double e = kind == SpectrumKind::Geometric ? static_cast<double>(j) : 0.5 * static_cast<double>(j);
    s(static_cast<Eigen::Index>(j)) = std::pow(xi, e);
  }
  return s;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix b(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) b(i, j) = normal(rng);
  return b;
}

inline Matrix synthesize(const SpectralRecipe& recipe) {
  if (recipe.m < recipe.d || recipe.d == 0) throw ConfigError("synthesize: requires m >= d >= 1");
  if (!(recipe.xi > 0.0 && recipe.xi <= 1.0)) throw ConfigError("synthesize: xi must lie in (0, 1]");
  const auto m = static_cast<Eigen::Index>(recipe.m);
  const auto d = static_cast<Eigen::Index>(recipe.d);
  for (std::uint64_t s = recipe.seed; s < recipe.seed + 64; ++s) {
    std::mt19937_64 rng(s);
    const Matrix b = gaussian_matrix(m, d, rng);
    Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()(d - 1) < 1e-10 * svd.singularValues()(0)) continue;
    const Vector sigma = target_spectrum(recipe.d, recipe.xi, recipe.exponent_kind);
    return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
  }
  throw DegenerateSample("synthesize: Gaussian sample rank deficient for 64 consecutive seeds");
}

/// Contiguous row blocks of m / n rows each.
inline std::vector<Matrix> partition(const Eigen::Ref<const Matrix>& a, std::size_t n) {
  if (n == 0) throw ConfigError("partition: n must be >= 1");
  const auto m = static_cast<std::size_t>(a.rows());
  if (m % n != 0) {
    throw IndivisibleRows("partition: " + std::to_string(n) + " does not divide " + std::to_string(m) + " rows");
  }
  const auto rows = static_cast<Eigen::Index>(m / n);
  std::vector<Matrix> blocks;
  blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) blocks.emplace_back(a.middleRows(static_cast<Eigen::Index>(i) * rows, rows));
  return blocks;
}

/// Distributed composite problem: node i holds
///
///   f_i(x) = curvature * tr(x^T G_i x) / 2 - tr(C_i^T x),   G_i = A_i^T A_i,
///
/// and all nodes share the regularizer. SPCA/CISE use curvature -1 and no
/// linear term; the Euclidean quadratic test problem uses curvature +1.
/// Only the d x d Gram matrices are kept.
struct ProblemInstance {
  ProblemKind kind = ProblemKind::SPCA;
  RegularizerSpec reg;
  Eigen::Index d = 0;
  Eigen::Index r = 0;
  double curvature = -1.0;
  std::vector<Matrix> grams;
  std::vector<Matrix> linear;  // empty for SPCA / CISE
  std::vector<std::size_t> rows_per_node;

  std::size_t n() const { return grams.size(); }

  Matrix total_gram() const {
    Matrix g = Matrix::Zero(d, d);
    for (const auto& gi : grams) g += gi;
    return g;
  }
};

inline ProblemInstance make_instance(ProblemKind kind, const std::vector<Matrix>& blocks, Eigen::Index r,
                                     RegularizerSpec reg) {
  if (blocks.empty()) throw ConfigError("make_instance: no data blocks");
  ProblemInstance inst;
  inst.kind = kind;
  inst.reg = reg;
  inst.d = blocks.front().cols();
  inst.r = r;
  if (r < 1 || r > inst.d) throw ConfigError("make_instance: requires 1 <= r <= d");
  inst.curvature = kind == ProblemKind::Quadratic ? 1.0 : -1.0;
  for (const auto& a : blocks) {
    if (a.cols() != inst.d) throw ConfigError("make_instance: blocks disagree on column count");
    inst.grams.push_back(a.transpose() * a);
    inst.rows_per_node.push_back(static_cast<std::size_t>(a.rows()));
  }
  return inst;
}

inline ProblemInstance make_spca_instance(const std::vector<Matrix>& blocks, Eigen::Index r, double lambda) {
  return make_instance(ProblemKind::SPCA, blocks, r, RegularizerSpec::l1(lambda));
}

inline ProblemInstance make_cise_instance(const std::vector<Matrix>& blocks, Eigen::Index r, double lambda) {
  return make_instance(ProblemKind::CISE, blocks, r, RegularizerSpec::l21(lambda));
}

/// Strongly convex least-squares problem f_i(x) = ||A_i x - B_i||^2 / 2 (up to
/// a constant) with an l1 penalty; the Euclidean reference for PG-EXTRA.
inline ProblemInstance make_quadratic_instance(const std::vector<Matrix>& blocks, const std::vector<Matrix>& targets,
                                               double lambda) {
  if (targets.size() != blocks.size()) throw ConfigError("make_quadratic_instance: target count mismatch");
  ProblemInstance inst =
      make_instance(ProblemKind::Quadratic, blocks, targets.front().cols(), RegularizerSpec::l1(lambda));
  for (std::size_t i = 0; i < blocks.size(); ++i) inst.linear.push_back(blocks[i].transpose() * targets[i]);
  return inst;
}

inline Matrix local_euclidean_gradient(const ProblemInstance& inst, std::size_t i,
                                       const Eigen::Ref<const Matrix>& x) {
  Matrix g = inst.curvature * (inst.grams[i] * x);
  if (!inst.linear.empty()) g -= inst.linear[i];
  return g;
}

inline double local_objective(const ProblemInstance& inst, std::size_t i, const Eigen::Ref<const Matrix>& x) {
  double v = 0.5 * inst.curvature * (x.transpose() * inst.grams[i] * x).trace();
  if (!inst.linear.empty()) v -= inst.linear[i].cwiseProduct(x).sum();
  return v;
}

/// (1/n) sum_i f_i(x); the regularizer is not included.
inline double global_smooth_objective(const ProblemInstance& inst, const Eigen::Ref<const Matrix>& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) v += local_objective(inst, i, x);
  return v / static_cast<double>(inst.n());
}

/// (1/n) sum_i grad f_i(x).
inline Matrix global_euclidean_gradient(const ProblemInstance& inst, const Eigen::Ref<const Matrix>& x) {
  Matrix g = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t i = 0; i < inst.n(); ++i) g += local_euclidean_gradient(inst, i, x);
  return g / static_cast<double>(inst.n());
}

/// h(x) = (1/n) sum_i f_i(x) + r(x).
inline double composite_objective(const ProblemInstance& inst, const Eigen::Ref<const Matrix>& x) {
  return global_smooth_objective(inst, x) + value(inst.reg, x);
}

/// ||G_i||_2, a Lipschitz constant of grad f_i.
inline double gradient_lipschitz(const ProblemInstance& inst, std::size_t i) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.grams[i], Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Bound of ||grad f_i|| on St(d, r) (linear term excluded): ||G_i||_2 sqrt(r).
inline double gradient_bound_on_stiefel(const ProblemInstance& inst, std::size_t i) {
  return gradient_lipschitz(inst, i) * std::sqrt(static_cast<double>(inst.r));
}

}  // namespace prextra
