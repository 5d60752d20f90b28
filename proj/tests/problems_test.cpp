#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "prextra/io.hpp"
#include "prextra/oracles.hpp"
#include "prextra/problems.hpp"

using namespace prextra;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "prextra_problems_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

SpectralRecipe small_recipe(std::uint64_t seed = 3) {
  SpectralRecipe rc;
  rc.m = 400;
  rc.d = 10;
  rc.seed = seed;
  return rc;
}

}  // namespace

TEST(TargetSpectrum, Geometric) {
  const Vector s = target_spectrum(10, 0.8, SpectrumKind::Geometric);
  EXPECT_EQ(s(0), 1.0);
  EXPECT_DOUBLE_EQ(s(1), 0.8);
  EXPECT_DOUBLE_EQ(s(2), 0.64);
  EXPECT_DOUBLE_EQ(s(3), 0.512);
  EXPECT_NEAR(s(9), 0.134217728, 1e-15);
}

TEST(TargetSpectrum, HalfGeometric) {
  const Vector s = target_spectrum(10, 0.8, SpectrumKind::HalfGeometric);
  EXPECT_NEAR(s(1), 0.894427190999916, 1e-15);
  EXPECT_DOUBLE_EQ(s(2), 0.8);
}

TEST(Synthesize, SingularValueFidelity) {
  for (auto kind : {SpectrumKind::Geometric, SpectrumKind::HalfGeometric}) {
    SpectralRecipe rc = small_recipe();
    rc.exponent_kind = kind;
    const Matrix a = synthesize(rc);
    ASSERT_EQ(a.rows(), 400);
    ASSERT_EQ(a.cols(), 10);
    const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
    EXPECT_LE((sv - target_spectrum(10, 0.8, kind)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Synthesize, UnitSpectrum) {
  SpectralRecipe rc = small_recipe();
  rc.xi = 1.0;
  const Matrix a = synthesize(rc);
  EXPECT_LE((a.transpose() * a - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Synthesize, Deterministic) {
  EXPECT_EQ(synthesize(small_recipe(9)), synthesize(small_recipe(9)));
  EXPECT_NE(synthesize(small_recipe(9)), synthesize(small_recipe(10)));
}

TEST(Synthesize, InvalidRecipe) {
  SpectralRecipe rc = small_recipe();
  rc.m = 5;
  EXPECT_THROW(synthesize(rc), ConfigError);
  rc = small_recipe();
  rc.xi = 0.0;
  EXPECT_THROW(synthesize(rc), ConfigError);
}

TEST(Partition, DefaultShape) {
  SpectralRecipe rc;
  rc.seed = 2;
  const Matrix a = synthesize(rc);
  const auto blocks = partition(a, 8);
  ASSERT_EQ(blocks.size(), 8u);
  Matrix g = Matrix::Zero(10, 10);
  for (const auto& b : blocks) {
    EXPECT_EQ(b.rows(), 1000);
    EXPECT_EQ(b.cols(), 10);
    g += b.transpose() * b;
  }
  EXPECT_LE((g - a.transpose() * a).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Partition, SingleNodeIsWholeMatrix) {
  const Matrix a = synthesize(small_recipe());
  const auto blocks = partition(a, 1);
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0], a);
}

TEST(Partition, Indivisible) {
  EXPECT_THROW(partition(Matrix::Zero(10, 3), 3), IndivisibleRows);
  EXPECT_THROW(partition(Matrix::Zero(10, 3), 0), ConfigError);
}

TEST(ProblemInstance, GramIdentity) {
  const Matrix a = synthesize(small_recipe());
  const ProblemInstance inst = make_spca_instance(partition(a, 4), 3, 1e-3);
  EXPECT_EQ(inst.n(), 4u);
  EXPECT_LE((inst.total_gram() - a.transpose() * a).cwiseAbs().maxCoeff(), 1e-10);
  std::size_t rows = 0;
  for (auto m : inst.rows_per_node) rows += m;
  EXPECT_EQ(rows, 400u);
}

TEST(ProblemInstance, InvalidRank) {
  const auto blocks = partition(synthesize(small_recipe()), 2);
  EXPECT_THROW(make_spca_instance(blocks, 11, 1e-3), ConfigError);
  EXPECT_THROW(make_spca_instance(blocks, 0, 1e-3), ConfigError);
  EXPECT_THROW(make_spca_instance({}, 2, 1e-3), ConfigError);
}

TEST(LocalGradient, ZeroCases) {
  std::mt19937_64 rng(1);
  const ProblemInstance zero_data = make_spca_instance({Matrix::Zero(20, 6)}, 2, 0.1);
  EXPECT_EQ(local_euclidean_gradient(zero_data, 0, gaussian_matrix(6, 2, rng)).norm(), 0.0);
  EXPECT_EQ(local_objective(zero_data, 0, gaussian_matrix(6, 2, rng)), 0.0);
  const ProblemInstance inst = make_spca_instance(partition(synthesize(small_recipe()), 2), 3, 0.1);
  EXPECT_EQ(local_euclidean_gradient(inst, 1, Matrix::Zero(10, 3)).norm(), 0.0);
  EXPECT_EQ(local_objective(inst, 1, Matrix::Zero(10, 3)), 0.0);
}

TEST(LocalGradient, FiniteDifference) {
  std::mt19937_64 rng(2);
  std::vector<Matrix> blocks, targets;
  for (int i = 0; i < 3; ++i) {
    blocks.push_back(gaussian_matrix(15, 6, rng));
    targets.push_back(gaussian_matrix(15, 2, rng));
  }
  const ProblemInstance spca = make_spca_instance(blocks, 2, 0.1);
  const ProblemInstance cise = make_cise_instance(blocks, 2, 0.1);
  const ProblemInstance quad = make_quadratic_instance(blocks, targets, 0.1);
  for (const ProblemInstance* inst : {&spca, &cise, &quad})
    for (std::size_t i = 0; i < 3; ++i) {
      const Matrix x = gaussian_matrix(6, 2, rng);
      const Matrix fd =
          oracle::finite_difference_gradient([&](const Matrix& z) { return local_objective(*inst, i, z); }, x);
      EXPECT_LE((fd - local_euclidean_gradient(*inst, i, x)).cwiseAbs().maxCoeff(), 1e-5);
    }
}

TEST(GlobalObjective, TopSingularVectors) {
  const Matrix a = synthesize(small_recipe());
  const ProblemInstance inst = make_spca_instance(partition(a, 4), 3, 0.0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinV);
  const Matrix x = svd.matrixV().leftCols(3);
  double expected = 0.0;
  for (int j = 0; j < 3; ++j) expected -= 0.5 * svd.singularValues()(j) * svd.singularValues()(j);
  expected /= 4.0;
  EXPECT_NEAR(global_smooth_objective(inst, x), expected, 1e-12);
  EXPECT_NEAR(composite_objective(inst, x), expected, 1e-12);
}

TEST(GlobalObjective, CompositeAddsRegularizer) {
  std::mt19937_64 rng(3);
  const ProblemInstance inst = make_cise_instance(partition(synthesize(small_recipe()), 2), 3, 0.05);
  const Matrix x = gaussian_matrix(10, 3, rng);
  EXPECT_NEAR(composite_objective(inst, x), global_smooth_objective(inst, x) + value(inst.reg, x), 1e-14);
  const Matrix g = global_euclidean_gradient(inst, x);
  const Matrix expected = 0.5 * (local_euclidean_gradient(inst, 0, x) + local_euclidean_gradient(inst, 1, x));
  EXPECT_LE((g - expected).norm(), 1e-14);
}

TEST(Assumption2, LipschitzAndBound) {
  std::mt19937_64 rng(4);
  const ProblemInstance inst = make_spca_instance(partition(synthesize(small_recipe()), 4), 5, 1e-3);
  for (std::size_t i = 0; i < inst.n(); ++i) {
    const double lf = gradient_lipschitz(inst, i), lg = gradient_bound_on_stiefel(inst, i);
    for (int t = 0; t < 50; ++t) {
      const Matrix x = project_to_manifold(gaussian_matrix(10, 5, rng)).matrix();
      const Matrix y = project_to_manifold(gaussian_matrix(10, 5, rng)).matrix();
      const Matrix gx = local_euclidean_gradient(inst, i, x), gy = local_euclidean_gradient(inst, i, y);
      EXPECT_LE((gx - gy).norm(), lf * (x - y).norm() * (1 + 1e-12));
      EXPECT_LE(gx.norm(), lg * (1 + 1e-12));
    }
  }
}

TEST(Io, Mxa1RoundTrip) {
  std::mt19937_64 rng(5);
  for (auto [r, c] : {std::pair{1, 1}, std::pair{7, 3}, std::pair{50, 10}}) {
    const Matrix a = gaussian_matrix(r, c, rng) * 1e3;
    const std::string p = temp_path("rt.mxa1");
    io::write_mxa1(p, a);
    EXPECT_EQ(io::read_mxa1(p), a);
    EXPECT_EQ(io::read_matrix(p), a);
    EXPECT_EQ(std::filesystem::file_size(p), 20u + 8u * static_cast<unsigned>(r * c));
  }
}

TEST(Io, Mxa1Layout) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  const std::string p = temp_path("layout.mxa1");
  io::write_mxa1(p, a);
  std::ifstream in(p, std::ios::binary);
  char magic[4];
  std::uint64_t rows = 0, cols = 0;
  double v[4];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  in.read(reinterpret_cast<char*>(v), 32);
  EXPECT_EQ(std::string(magic, 4), "MXA1");
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(cols, 2u);
  EXPECT_EQ(v[1], 2.0);  // row-major
  EXPECT_EQ(v[2], 3.0);
}

TEST(Io, Mxa1Corrupt) {
  const std::string p = temp_path("bad.mxa1");
  io::write_mxa1(p, Matrix::Ones(3, 3));
  std::filesystem::resize_file(p, 40);
  EXPECT_THROW(io::read_mxa1(p), FormatError);
  {
    std::ofstream out(p, std::ios::binary);
    out << "MXA2xxxxxxxxxxxxxxxx";
  }
  EXPECT_THROW(io::read_mxa1(p), FormatError);
  EXPECT_THROW(io::read_mxa1(temp_path("missing.mxa1")), FormatError);
}

TEST(Io, CsvRoundTrip) {
  std::mt19937_64 rng(6);
  const Matrix a = gaussian_matrix(9, 4, rng) * 1e-7;
  const std::string p = temp_path("rt.csv");
  io::write_csv_matrix(p, a);
  EXPECT_EQ(io::read_csv_matrix(p), a);
  EXPECT_EQ(io::read_matrix(p), a);
}

TEST(Io, CsvMalformed) {
  const std::string p = temp_path("bad.csv");
  {
    std::ofstream out(p);
    out << "2,2\n1,2\n3\n";
  }
  EXPECT_THROW(io::read_csv_matrix(p), FormatError);
  {
    std::ofstream out(p);
    out << "2,2\n1,2\n3,x\n";
  }
  EXPECT_THROW(io::read_csv_matrix(p), FormatError);
  {
    std::ofstream out(p);
    out << "1,2\n1,2\n3,4\n";
  }
  EXPECT_THROW(io::read_csv_matrix(p), FormatError);
}

TEST(Io, FormatDouble) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(std::nan("")), "nan");
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 1000; ++t) {
    const double v = normal(rng) * std::pow(10.0, normal(rng) * 5);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
}
