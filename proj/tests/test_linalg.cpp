#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rnimage/linalg.hpp"
#include "rnimage/moments.hpp"

using namespace rnimage;

namespace {

Matrix random_spd(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (double& v : a.data()) v = g(rng);
  Matrix s = a.transposed() * a;
  for (std::size_t i = 0; i < n; ++i) s(i, i) += 1.0;
  return s;
}

Matrix random_symmetric(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = g(rng);
  return a;
}

}  // namespace

TEST(Cholesky, Identity) {
  const auto fac = cholesky(Matrix::identity(3));
  EXPECT_EQ(fac.L, Matrix::identity(3));
}

TEST(Cholesky, Diagonal) {
  const std::vector<double> d{2.0, 2.0 / 3.0, 2.0 / 5.0};
  const auto fac = cholesky(Matrix::diagonal(d));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fac.L(i, i), std::sqrt(d[i]), 1e-15);
  EXPECT_EQ(fac.L(1, 0), 0.0);
}

TEST(Cholesky, ReconstructsRandomSpd) {
  std::mt19937 rng(1);
  for (std::size_t n : {1u, 4u, 17u}) {
    const Matrix G = random_spd(n, rng);
    const auto fac = cholesky(G);
    for (std::size_t i = 0; i < n; ++i) EXPECT_GT(fac.L(i, i), 0.0);
    EXPECT_LE((fac.L * fac.L.transposed() - G).max_abs(), 1e-10 * G.max_abs());
  }
}

TEST(Cholesky, RankDeficientPixelGramm) {
  // 4x4 pixels = 16 support points cannot carry 25 independent functions.
  GrayImage grid(4, 4, 1.0);
  for (Family f : {Family::Chebyshev, Family::Legendre}) {
    const auto ms = moment_set_2d(grid, {f, Domain::Shifted}, 5, 5);
    EXPECT_THROW(cholesky(ms.G), NotPositiveDefinite);
  }
  const auto ok = moment_set_2d(grid, {Family::Chebyshev, Domain::Shifted}, 4, 4);
  EXPECT_NO_THROW(cholesky(ok.G));
}

TEST(Cholesky, PivotIndexReported) {
  Matrix m = Matrix::identity(3);
  m(2, 2) = -1.0;
  try {
    cholesky(m);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
}

TEST(SpdSolve, Examples) {
  const auto id = cholesky(Matrix::identity(3));
  const std::vector<double> b{1.5, -2.0, 0.25};
  EXPECT_EQ(spd_solve(id, b), b);

  const auto d = cholesky(Matrix::diagonal(std::vector<double>{2.0, 2.0 / 3.0}));
  const auto x = spd_solve(d, std::vector<double>{2.0, 2.0 / 3.0});
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);

  EXPECT_THROW(spd_solve(d, std::vector<double>{1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_THROW(spd_solve(d, Matrix(3, 2)), InvalidArgument);
}

TEST(SpdSolve, ResidualOnRandomSystems) {
  std::mt19937 rng(6);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix G = random_spd(6, rng);
    std::vector<double> b(6);
    for (double& v : b) v = g(rng);
    const auto x = spd_solve(cholesky(G), b);
    const auto gx = G * std::span<const double>(x);
    double bmax = 0.0, res = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      bmax = std::max(bmax, std::abs(b[i]));
      res = std::max(res, std::abs(gx[i] - b[i]));
    }
    EXPECT_LE(res, 1e-9 * bmax);
  }
}

TEST(SpdSolve, MatrixRightHandSide) {
  std::mt19937 rng(12);
  const Matrix G = random_spd(5, rng);
  const Matrix B = random_symmetric(5, rng);
  const Matrix X = spd_solve(cholesky(G), B);
  EXPECT_LE((G * X - B).max_abs(), 1e-10 * B.max_abs());
}

TEST(GeneralizedEig, ScaledGrammGivesConstantSpectrum) {
  std::mt19937 rng(4);
  const Matrix G = random_spd(5, rng);
  Matrix F = G;
  for (double& v : F.data()) v *= 0.37;
  const auto eig = generalized_sym_eig(F, cholesky(G));
  for (double l : eig.lambda) EXPECT_NEAR(l, 0.37, 1e-12);

  const auto unit = generalized_sym_eig(G, cholesky(G));
  for (double l : unit.lambda) EXPECT_NEAR(l, 1.0, 1e-12);
  const Matrix pt = unit.psi.transposed();
  EXPECT_LE((pt * G * unit.psi - Matrix::identity(5)).max_abs(), 1e-8);
}

TEST(GeneralizedEig, DiagonalStandardProblem) {
  const Matrix F = Matrix::diagonal(std::vector<double>{3.0, 1.0});
  const auto eig = generalized_sym_eig(F, cholesky(Matrix::identity(2)));
  ASSERT_EQ(eig.dim(), 2u);
  EXPECT_DOUBLE_EQ(eig.lambda[0], 1.0);
  EXPECT_DOUBLE_EQ(eig.lambda[1], 3.0);
  EXPECT_DOUBLE_EQ(eig.psi(1, 0), 1.0);  // e₂ for λ = 1
  EXPECT_DOUBLE_EQ(eig.psi(0, 1), 1.0);  // e₁ for λ = 3
  EXPECT_DOUBLE_EQ(eig.psi(0, 0), 0.0);

  const Matrix F2 = Matrix::diagonal(std::vector<double>{1.0, 3.0});
  const auto eig2 = generalized_sym_eig(F2, cholesky(Matrix::identity(2)));
  EXPECT_DOUBLE_EQ(eig2.psi(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(eig2.psi(1, 1), 1.0);
}

TEST(GeneralizedEig, InvariantsOnRandomPairs) {
  std::mt19937 rng(31);
  for (std::size_t n : {2u, 7u, 20u}) {
    const Matrix G = random_spd(n, rng);
    const Matrix F = random_symmetric(n, rng);
    const auto eig = generalized_sym_eig(F, cholesky(G));
    EXPECT_TRUE(std::is_sorted(eig.lambda.begin(), eig.lambda.end()));
    const Matrix pt = eig.psi.transposed();
    EXPECT_LE((pt * G * eig.psi - Matrix::identity(n)).max_abs(), 1e-8);
    EXPECT_LE((pt * F * eig.psi - Matrix::diagonal(eig.lambda)).max_abs(), 1e-8);
    // sign convention
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t big = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (std::abs(eig.psi(i, s)) > std::abs(eig.psi(big, s))) big = i;
      EXPECT_GT(eig.psi(big, s), 0.0);
    }
    // trace identity
    double sum = 0.0;
    for (double l : eig.lambda) sum += l;
    const double tr = spd_solve(cholesky(G), F).trace();
    EXPECT_NEAR(sum, tr, 1e-9 * std::max(1.0, std::abs(tr)));
  }
}

TEST(GeneralizedEig, RayleighBoundsOnImages) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = oracle::random_byte_image(12, 10, rng);
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    for (std::size_t n : {2u, 4u, 6u}) {
      const auto ms = moment_set_2d(img, {Family::Chebyshev, Domain::Shifted}, n, std::min<std::size_t>(n, 5));
      const auto eig = generalized_sym_eig(ms.F, cholesky(ms.G));
      for (double l : eig.lambda) {
        EXPECT_GE(l, *lo - 1e-9);
        EXPECT_LE(l, *hi + 1e-9);
      }
    }
  }
}

TEST(GeneralizedEig, DimensionMismatchThrows) {
  EXPECT_THROW(generalized_sym_eig(Matrix::identity(3), cholesky(Matrix::identity(2))), InvalidArgument);
}

TEST(Jacobi, ZeroMatrixIsAlreadyDiagonal) {
  Matrix a(4, 4);
  Matrix v;
  jacobi_eigen(a, v);
  EXPECT_EQ(v, Matrix::identity(4));
}

TEST(Jacobi, NonConvergenceIsReported) {
  std::mt19937 rng(2);
  Matrix a = random_symmetric(30, rng);
  Matrix v;
  EXPECT_THROW(jacobi_eigen(a, v, 1e-12, 1), NumericError);
}
