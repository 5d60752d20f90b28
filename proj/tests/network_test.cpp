#include <cmath>

#include <gtest/gtest.h>

#include "prextra/network.hpp"

using namespace prextra;

namespace {

Graph path3() { return Graph::from_edges(3, {{0, 1}, {1, 2}}); }

Graph complete(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

}  // namespace

TEST(ErGraph, SingleNode) {
  const Graph g = generate_er_graph(1, 0.6, 5);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_TRUE(g.connected());
}

TEST(ErGraph, CompleteWhenPIsOne) {
  const Graph g = generate_er_graph(4, 1.0, 5);
  EXPECT_EQ(g.edges.size(), 6u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g.degree(i), 3u);
}

TEST(ErGraph, Deterministic) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Graph a = generate_er_graph(8, 0.6, s), b = generate_er_graph(8, 0.6, s);
    EXPECT_EQ(a.edges, b.edges);
    EXPECT_EQ(a.sample_seed, b.sample_seed);
  }
}

TEST(ErGraph, ConnectedAndUndirected) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Graph g = generate_er_graph(8, 0.3, s);
    EXPECT_TRUE(g.connected());
    EXPECT_GE(g.sample_seed, s);
    for (const auto& [i, j] : g.edges) {
      EXPECT_LT(i, j);
      EXPECT_NE(std::find(g.neighbors[i].begin(), g.neighbors[i].end(), j), g.neighbors[i].end());
      EXPECT_NE(std::find(g.neighbors[j].begin(), g.neighbors[j].end(), i), g.neighbors[j].end());
    }
  }
}

TEST(ErGraph, MeanDegreeOverSeeds) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) total += generate_er_graph(8, 0.6, s).average_degree();
  const double mean = total / 1000.0;
  EXPECT_GE(mean, 3.7);
  EXPECT_LE(mean, 5.3);
}

TEST(ErGraph, InvalidArguments) {
  EXPECT_THROW(generate_er_graph(0, 0.5, 1), ConfigError);
  EXPECT_THROW(generate_er_graph(4, 0.0, 1), ConfigError);
  EXPECT_THROW(generate_er_graph(4, 1.5, 1), ConfigError);
}

TEST(Graph, DisconnectedDetected) {
  EXPECT_FALSE(Graph::from_edges(4, {{0, 1}, {2, 3}}).connected());
}

TEST(Metropolis, PathGraph) {
  const MixingMatrix m = metropolis_weights(path3());
  Matrix expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  EXPECT_LE((m.W - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Metropolis, CompleteGraph) {
  const MixingMatrix m = metropolis_weights(complete(4));
  EXPECT_LE((m.W - Matrix::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(spectral_gap(m), 1e-15);
}

TEST(Metropolis, WTildeExact) {
  const MixingMatrix m = metropolis_weights(generate_er_graph(8, 0.6, 3));
  EXPECT_EQ(m.W_tilde, (0.5 * (Matrix::Identity(8, 8) + m.W)).eval());
}

TEST(Metropolis, ErInvariants) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Graph g = generate_er_graph(8, 0.6, s);
    const MixingMatrix m = metropolis_weights(g);
    const MixingDiagnostics d = diagnose(m);
    EXPECT_TRUE(d.ok(1e-14)) << "seed " << s;
    for (Eigen::Index i = 0; i < 8; ++i)
      for (Eigen::Index j = 0; j < 8; ++j) {
        const bool edge = std::find(g.edges.begin(), g.edges.end(),
                                    std::make_pair<std::size_t, std::size_t>(std::min(i, j), std::max(i, j))) !=
                          g.edges.end();
        EXPECT_EQ(m.W(i, j) > 0.0, i == j || edge);
      }
  }
}

TEST(SpectralGap, PathGraphByEigendecomposition) {
  const MixingMatrix m = metropolis_weights(path3());
  // eigenvalues of the path MH matrix are 1, 2/3, 0
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.W);
  const Vector ev = es.eigenvalues();
  EXPECT_NEAR(ev(0), 0.0, 1e-15);
  EXPECT_NEAR(ev(1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(ev(2), 1.0, 1e-15);
  EXPECT_NEAR(spectral_gap(m), 2.0 / 3.0, 1e-15);
}

TEST(SpectralGap, SingleNode) {
  EXPECT_EQ(spectral_gap(metropolis_weights(generate_er_graph(1, 0.5, 0))), 0.0);
}

TEST(SpectralGap, MatchesSecondEigenvalueMagnitude) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MixingMatrix m = metropolis_weights(generate_er_graph(8, 0.6, s));
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.W);
    Vector ev = es.eigenvalues();  // ascending, last is 1
    const double expected = std::max(std::abs(ev(0)), std::abs(ev(6)));
    EXPECT_NEAR(spectral_gap(m), expected, 1e-13);
    EXPECT_LT(spectral_gap(m), 1.0);
  }
}

TEST(WTilde, SharesEigenvectorsAndIsPsd) {
  const MixingMatrix m = metropolis_weights(generate_er_graph(8, 0.6, 11));
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.W);
  const Matrix v = es.eigenvectors();
  const Matrix t = v.transpose() * m.W_tilde * v;
  for (Eigen::Index i = 0; i < 8; ++i) {
    EXPECT_NEAR(t(i, i), 0.5 * (1.0 + es.eigenvalues()(i)), 1e-14);
    EXPECT_GE(t(i, i), 0.0);
  }
  EXPECT_LE((t - Matrix(t.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Diagnose, CatchesCorruption) {
  MixingMatrix m = metropolis_weights(path3());
  m.W(0, 0) += 0.01;
  m = MixingMatrix::from_weights(m.W);
  const MixingDiagnostics d = diagnose(m);
  EXPECT_NEAR(d.row_sum_error, 0.01, 1e-15);
  EXPECT_FALSE(d.ok());
}
