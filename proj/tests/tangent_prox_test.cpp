#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "prextra/oracles.hpp"
#include "prextra/problems.hpp"
#include "prextra/tangent_prox.hpp"

using namespace prextra;

namespace {

StiefelPoint random_point(Eigen::Index d, Eigen::Index r, std::mt19937_64& rng) {
  return project_to_manifold(gaussian_matrix(d, r, rng));
}

double g_value(const Matrix& y, const RegularizerSpec& reg, double tau, const Matrix& eta) {
  return eta.squaredNorm() / (2.0 * tau) + value(reg, y + eta);
}

}  // namespace

TEST(DualResidual, ZeroRegularizerAtZeroMultiplier) {
  std::mt19937_64 rng(1);
  const StiefelPoint y = random_point(5, 2, rng);
  const DualResidual dr = dual_residual(y, RegularizerSpec::zero(), 0.1, Matrix::Zero(2, 2));
  EXPECT_EQ(dr.eta_candidate.norm(), 0.0);
  EXPECT_EQ(dr.residual_matrix.norm(), 0.0);
}

TEST(DualResidual, L1AtZeroMultiplierUnrolled) {
  std::mt19937_64 rng(2);
  const StiefelPoint y = random_point(5, 2, rng);
  const auto reg = RegularizerSpec::l1(0.3);
  const double tau = 0.2;
  const DualResidual dr = dual_residual(y, reg, tau, Matrix::Zero(2, 2));
  Matrix eta(5, 2);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const double v = y.matrix()(i);
    eta(i) = (std::abs(v) > tau * 0.3 ? v - std::copysign(tau * 0.3, v) : 0.0) - v;
  }
  EXPECT_LE((dr.eta_candidate - eta).norm(), 1e-15);
  const Matrix e = y.matrix().transpose() * eta + eta.transpose() * y.matrix();
  EXPECT_LE((dr.residual_matrix - e).norm(), 1e-15);
}

TEST(DualResidual, ResidualIsSymmetric) {
  std::mt19937_64 rng(3);
  const StiefelPoint y = random_point(7, 3, rng);
  const Matrix lam = gaussian_matrix(3, 3, rng);
  const DualResidual dr = dual_residual(y, RegularizerSpec::l21(0.2), 0.1, sym(lam));
  EXPECT_LE((dr.residual_matrix - dr.residual_matrix.transpose()).norm(), 1e-14);
}

TEST(SymmetricBasis, Orthonormal) {
  for (Eigen::Index r : {1, 2, 3, 5}) {
    const auto basis = detail::symmetric_basis(r);
    ASSERT_EQ(static_cast<Eigen::Index>(basis.size()), r * (r + 1) / 2);
    for (std::size_t a = 0; a < basis.size(); ++a) {
      EXPECT_EQ(basis[a], basis[a].transpose());
      for (std::size_t b = 0; b < basis.size(); ++b)
        EXPECT_NEAR(basis[a].cwiseProduct(basis[b]).sum(), a == b ? 1.0 : 0.0, 1e-15);
    }
  }
}

TEST(ProxDerivative, MatchesFiniteDifferenceAwayFromKinks) {
  std::mt19937_64 rng(4);
  for (auto reg : {RegularizerSpec::l1(0.3), RegularizerSpec::l21(0.3)}) {
    const Matrix v = gaussian_matrix(6, 3, rng);
    const Matrix w = gaussian_matrix(6, 3, rng);
    const double h = 1e-7;
    const Matrix fd = (euclidean_prox(reg, v + h * w, 0.5) - euclidean_prox(reg, v - h * w, 0.5)) / (2 * h);
    EXPECT_LE((detail::prox_derivative(reg, v, 0.5, w) - fd).norm(), 1e-6);
  }
}

TEST(SolveSubproblem, ZeroRegularizer) {
  std::mt19937_64 rng(5);
  const StiefelPoint y = random_point(6, 3, rng);
  const SubproblemResult res = solve_subproblem(y, RegularizerSpec::zero(), 0.5);
  EXPECT_EQ(res.eta.norm(), 0.0);
  EXPECT_EQ(res.kkt_residual, 0.0);
}

TEST(SolveSubproblem, MatchesSubgradientOracle) {
  std::mt19937_64 rng(6);
  const auto reg = RegularizerSpec::l1(0.1);
  const double tau = 0.05;
  for (int t = 0; t < 10; ++t) {
    const StiefelPoint y = random_point(4, 2, rng);
    const Matrix eta = solve_subproblem(y, reg, tau).eta.matrix();
    const Matrix ref = oracle::subproblem_by_subgradient(y.matrix(), reg, tau);
    EXPECT_LE((eta - ref).norm(), 1e-6);
  }
}

TEST(SolveSubproblem, L21MatchesSubgradientOracle) {
  std::mt19937_64 rng(7);
  const auto reg = RegularizerSpec::l21(0.1);
  const double tau = 0.05;
  for (int t = 0; t < 5; ++t) {
    const StiefelPoint y = random_point(4, 2, rng);
    const Matrix eta = solve_subproblem(y, reg, tau).eta.matrix();
    const Matrix ref = oracle::subproblem_by_subgradient(y.matrix(), reg, tau);
    EXPECT_LE((eta - ref).norm(), 1e-6);
  }
}

TEST(SolveSubproblem, OutputProperties) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const auto reg = RegularizerSpec::make(t % 2 ? RegKind::L1 : RegKind::L21, 0.5 * unif(rng) + 1e-3);
    const double tau = 0.3 * unif(rng) + 1e-4;
    const StiefelPoint y = random_point(8, 3, rng);
    const SubproblemOptions opts;
    const SubproblemResult res = solve_subproblem(y, reg, tau, opts);
    const Matrix& eta = res.eta.matrix();
    EXPECT_LE(res.eta.tangency_residual(), 1e-9);
    EXPECT_LE(res.eta.norm(), 2 * tau * lipschitz_constant(reg, 8, 3) + 1e-9);
    EXPECT_LE(res.kkt_residual, opts.tol);
    EXPECT_GE(g_value(y.matrix(), reg, tau, Matrix::Zero(8, 3)) - g_value(y.matrix(), reg, tau, eta),
              eta.squaredNorm() / (2 * tau) - 1e-9);
  }
}

TEST(SolveSubproblem, BeatsTangentPerturbations) {
  std::mt19937_64 rng(9);
  const auto reg = RegularizerSpec::l1(0.2);
  const double tau = 0.1;
  const StiefelPoint y = random_point(6, 2, rng);
  const Matrix eta = solve_subproblem(y, reg, tau).eta.matrix();
  const double best = g_value(y.matrix(), reg, tau, eta);
  for (int t = 0; t < 200; ++t) {
    Matrix p = tangent_projection(y.matrix(), gaussian_matrix(6, 2, rng));
    p *= 1e-3 / p.norm();
    EXPECT_GE(g_value(y.matrix(), reg, tau, eta + p), best - 1e-12);
  }
}

TEST(SolveSubproblem, UniqueAcrossInitializations) {
  std::mt19937_64 rng(10);
  const auto reg = RegularizerSpec::l1(0.1);
  const StiefelPoint y = random_point(5, 3, rng);
  const Matrix base = solve_subproblem(y, reg, 0.05).eta.matrix();
  for (int t = 0; t < 5; ++t) {
    SubproblemOptions opts;
    opts.warm_start = sym(gaussian_matrix(3, 3, rng));
    EXPECT_LE((solve_subproblem(y, reg, 0.05, opts).eta.matrix() - base).norm(), 1e-8);
  }
}

TEST(SolveSubproblem, WarmStartAtSolutionNeedsNoIterations) {
  std::mt19937_64 rng(11);
  const auto reg = RegularizerSpec::l1(0.1);
  const StiefelPoint y = random_point(5, 2, rng);
  const SubproblemResult first = solve_subproblem(y, reg, 0.05);
  SubproblemOptions opts;
  opts.warm_start = first.multiplier;
  EXPECT_EQ(solve_subproblem(y, reg, 0.05, opts).inner_iterations, 0);
}

TEST(SolveSubproblem, FixedPointFallbackAgrees) {
  std::mt19937_64 rng(12);
  const auto reg = RegularizerSpec::l1(0.1);
  const StiefelPoint y = random_point(4, 2, rng);
  const SubproblemResult ssn = solve_subproblem(y, reg, 0.05);
  SubproblemOptions opts;
  opts.newton_max_iters = 0;
  const SubproblemResult fp = solve_subproblem(y, reg, 0.05, opts);
  EXPECT_EQ(ssn.method_used, SubproblemMethod::SemismoothNewton);
  EXPECT_EQ(fp.method_used, SubproblemMethod::FixedPoint);
  EXPECT_LE((ssn.eta.matrix() - fp.eta.matrix()).norm(), 1e-8);
}

TEST(SolveSubproblem, NoConvergenceWhenCapped) {
  std::mt19937_64 rng(13);
  const StiefelPoint y = random_point(6, 3, rng);
  SubproblemOptions opts;
  opts.newton_max_iters = 0;
  opts.fixed_point_max_iters = 1;
  opts.tol = 1e-15;
  EXPECT_THROW(solve_subproblem(y, RegularizerSpec::l1(0.5), 0.3, opts), NoConvergence);
}

TEST(SolveSubproblem, InvalidArguments) {
  std::mt19937_64 rng(14);
  const StiefelPoint y = random_point(4, 2, rng);
  EXPECT_THROW(solve_subproblem(y, RegularizerSpec::l1(0.1), 0.0), Error);
  SubproblemOptions opts;
  opts.tol = 0.0;
  EXPECT_THROW(solve_subproblem(y, RegularizerSpec::l1(0.1), 0.1, opts), Error);
}

TEST(SolveSubproblem, TauScaling) {
  std::mt19937_64 rng(15);
  const auto reg = RegularizerSpec::l1(0.1);
  const StiefelPoint y = random_point(10, 5, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double tau : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    const double n = solve_subproblem(y, reg, tau).eta.norm();
    EXPECT_LE(n, 2 * tau * lipschitz_constant(reg, 10, 5) + 1e-9);
    EXPECT_LE(n, prev);
    prev = n;
  }
  EXPECT_LT(prev, 1e-4);
}
