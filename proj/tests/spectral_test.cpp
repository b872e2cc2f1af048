#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gkconsist/spectral.hpp"
#include "test_util.hpp"

using namespace gkconsist;

namespace {

Matrix two_by_two(double a) {
  Matrix m(2, 2);
  m << 1, a, a, 1;
  return m;
}

/// Base matrix whose Schur complement (ell = 1) has eigenvalues {0.2, 1.5}:
/// [[1, k, 0], [k, 1, c], [0, c, 1]] with k^2 = 0.3, c^2 = 0.4 gives
/// S = [[0.7, c], [c, 1]], trace 1.7, determinant 0.3.
KernelMatrix schur_02_15() {
  Matrix m(3, 3);
  const double k = std::sqrt(0.3), c = std::sqrt(0.4);
  m << 1, k, 0, k, 1, c, 0, c, 1;
  return KernelMatrix(m);
}

}  // namespace

TEST(SymEigen, ClosedForms) {
  const auto id = sym_eigen(Matrix::Identity(3, 3));
  EXPECT_TRUE(id.values.isApprox(Vector::Ones(3)));

  const auto e = sym_eigen(two_by_two(0.5));
  EXPECT_NEAR(e.values(0), 0.5, 1e-15);
  EXPECT_NEAR(e.values(1), 1.5, 1e-15);

  const auto ones = sym_eigen(Matrix::Ones(5, 5));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ones.values(i), 0.0, 1e-14);
  EXPECT_NEAR(ones.values(4), 5.0, 1e-14);
}

TEST(SymEigen, RejectsAsymmetric) {
  Matrix m(2, 2);
  m << 1, 0.5, 0.4, 1;
  EXPECT_THROW(sym_eigen(m), InputError);
  EXPECT_THROW(smallest_eigenvalue(m), InputError);
}

// Residual and orthogonality contracts, with eigenvalues cross-checked against
// a cyclic Jacobi oracle.
TEST(SymEigen, ContractsOnRandomSymmetric) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::Index n = 1 + rep % 9;
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = nd(rng);
    const auto e = sym_eigen(a);
    const double fro = a.norm();
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_LE((a * e.vectors.col(i) - e.values(i) * e.vectors.col(i)).norm(), 1e-10 * fro);
      if (i > 0) {
        EXPECT_LE(e.values(i - 1), e.values(i));
      }
    }
    EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_LE((e.values - testkit::jacobi_eigenvalues(a)).cwiseAbs().maxCoeff(), 1e-10 * fro);
  }
}

TEST(SmallestEigenvalue, Examples) {
  EXPECT_NEAR(smallest_eigenvalue(Matrix::Ones(4, 4)), 0.0, 1e-14);
  EXPECT_NEAR(smallest_eigenvalue(two_by_two(0.36788)), 0.63212, 1e-14);
  EXPECT_NEAR(smallest_eigenvalue(Matrix::Identity(3, 3)), 1.0, 1e-15);
}

TEST(EigenClusters, GroupsByGap) {
  Vector v(5);
  v << 0.0, 1e-9, 0.5, 0.5 + 5e-7, 2.0;
  const auto c = eigen_clusters(v, 1e-6);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], (std::pair<Eigen::Index, Eigen::Index>{0, 2}));
  EXPECT_EQ(c[1], (std::pair<Eigen::Index, Eigen::Index>{2, 2}));
  EXPECT_EQ(c[2], (std::pair<Eigen::Index, Eigen::Index>{4, 1}));
}

TEST(PartitionedKernel, BlocksTileBase) {
  std::mt19937_64 rng(1);
  const auto k = testkit::random_gaussian_kernel(rng, 5, 2, 1.0);
  const PartitionedKernel p(k, 2);
  EXPECT_EQ(p.m(), 3);
  Matrix tiled(5, 5);
  tiled << p.k11(), p.k12(), p.k21(), p.k22();
  EXPECT_EQ(tiled, k.matrix());
  EXPECT_EQ(Matrix(p.k21()), Matrix(p.k12().transpose()));
}

TEST(PartitionedKernel, EllOutOfRange) {
  EXPECT_THROW(PartitionedKernel(KernelMatrix::identity(3), 0), ConfigError);
  EXPECT_THROW(PartitionedKernel(KernelMatrix::identity(3), 3), ConfigError);
}

TEST(SchurComplement, BlockDiagonalReturnsK22) {
  Matrix m = Matrix::Identity(4, 4);
  m(2, 3) = m(3, 2) = 0.3;
  m(0, 1) = m(1, 0) = 0.6;
  const PartitionedKernel p(KernelMatrix(m), 2);
  EXPECT_EQ(schur_complement(p), Matrix(p.k22()));
}

TEST(SchurComplement, ScalarElimination) {
  const double a = 0.7;
  const PartitionedKernel p(KernelMatrix(two_by_two(a)), 1);
  const Matrix s = schur_complement(p);
  ASSERT_EQ(s.rows(), 1);
  EXPECT_NEAR(s(0, 0), 1.0 - a * a, 1e-15);
}

TEST(SchurComplement, ThreeByThreeLimitCase) {
  const double rho = std::exp(-0.5), b = std::exp(-1.0);
  Matrix m(3, 3);
  m << 1, rho * b, rho, rho * b, 1, rho * rho * b, rho, rho * rho * b, 1;
  const Matrix s = schur_complement(PartitionedKernel(KernelMatrix(m), 1));
  EXPECT_NEAR(s(0, 0), 1 - rho * rho * b * b, 1e-15);
  EXPECT_NEAR(s(1, 1), 1 - rho * rho, 1e-15);
  EXPECT_NEAR(s(0, 1), 0.0, 1e-15);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SchurComplement, IllConditionedBlockIsRejected) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = m(1, 0) = 1.0 - 1e-12;
  const PartitionedKernel p(KernelMatrix(m), 2);
  try {
    schur_complement(p, 1e8);
    FAIL() << "expected SingularityError";
  } catch (const SingularityError& e) {
    EXPECT_NE(std::string(e.what()).find("K11"), std::string::npos);
  }
  EXPECT_NO_THROW(schur_complement(p, 1e13));
}

// base - [K11; K21] [I, K11^{-1} K12] zeroes the first block row/column and
// leaves the Schur complement in the corner.
TEST(SchurComplement, EliminationIdentity) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index n = 2 + rep % 6;
    const auto k = testkit::random_gaussian_kernel(rng, n, 3, 1.0);
    const auto ell = static_cast<std::size_t>(1 + rep % (n - 1));
    const PartitionedKernel p(k, ell);
    const Matrix x = Matrix(p.k11()).ldlt().solve(Matrix(p.k12()));
    Matrix left(n, p.ell()), right(p.ell(), n);
    left << p.k11(), p.k21();
    right << Matrix::Identity(p.ell(), p.ell()), x;
    const Matrix r = k.matrix() - left * right;
    EXPECT_LE(r.topRows(p.ell()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(r.leftCols(p.ell()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((r.bottomRightCorner(p.m(), p.m()) - schur_complement(p)).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

// PSD input gives a PSD Schur complement whose algebraic and absolute
// minimum eigenvalues coincide.
TEST(SchurComplement, PsdPreserved) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 3 + rep % 5;
    const auto k = testkit::random_gaussian_kernel(rng, n, 2, 0.8);
    const PartitionedKernel p(k, static_cast<std::size_t>(1 + rep % (n - 1)));
    const auto e = sym_eigen(schur_complement(p, 1e12));
    EXPECT_GE(e.values(0), -1e-10);
    Eigen::Index arg = 0;
    e.values.cwiseAbs().minCoeff(&arg);
    EXPECT_EQ(arg, 0);
  }
}

TEST(ConstrainedLowRank, SingularSchurNeedsNoPerturbation) {
  Matrix m(3, 3);
  m << 1, 0, 0, 0, 1, 1, 0, 1, 1;
  const auto r = constrained_lowrank_delta(PartitionedKernel(KernelMatrix(m), 1));
  EXPECT_LE(r.norm, 1e-15);
  EXPECT_LE(r.delta.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ConstrainedLowRank, KnownSpectrum) {
  const PartitionedKernel p(schur_02_15(), 1);
  const auto e = sym_eigen(schur_complement(p));
  ASSERT_NEAR(e.values(0), 0.2, 1e-14);
  ASSERT_NEAR(e.values(1), 1.5, 1e-14);

  const auto r = constrained_lowrank_delta(p);
  EXPECT_NEAR(r.norm, 0.2, 1e-14);
  EXPECT_NEAR(r.theta, 0.2, 1e-14);
  const Matrix u = e.vectors.col(0);
  EXPECT_LE((r.delta + 0.2 * u * u.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(r.delta, r.delta.transpose());
  EXPECT_NEAR(r.norm, r.delta.norm(), 1e-12);

  const auto [lo, hi] = testkit::singular_range(assemble_with_delta(p, r.delta));
  EXPECT_LE(lo, 1e-8 * hi);
}

// Brute-force grid over symmetric 2x2 perturbations (x, y; y, z) with
// Frobenius norm x^2 + 2y^2 + z^2 < 0.2^2: none makes S + D singular.
TEST(ConstrainedLowRank, NoSmallerFeasiblePerturbationOnGrid) {
  const PartitionedKernel p(schur_02_15(), 1);
  const Matrix s = schur_complement(p);
  const double radius = 0.2;
  const int steps = 40;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = -steps; i <= steps; ++i)
    for (int j = -steps; j <= steps; ++j)
      for (int k = -steps; k <= steps; ++k) {
        const double x = radius * i / steps, y = radius * j / steps, z = radius * k / steps;
        const double fro = std::sqrt(x * x + 2 * y * y + z * z);
        if (fro >= 0.99 * radius) continue;
        Matrix d(2, 2);
        d << x, y, y, z;
        worst = std::min(worst, testkit::singular_range(s + d).first);
      }
  EXPECT_GT(worst, 1e-3);
}

TEST(ConstrainedLowRank, RandomPsdScenariosBecomeRankDeficient) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 2 + rep % 6;
    const auto k = testkit::random_gaussian_kernel(rng, n, 3, 1.0);
    const PartitionedKernel p(k, static_cast<std::size_t>(1 + rep % (n - 1)));
    const auto r = constrained_lowrank_delta(p, 1e12);
    const auto [lo, hi] = testkit::singular_range(assemble_with_delta(p, r.delta));
    EXPECT_LE(lo, 1e-8 * hi) << "rep " << rep;
  }
}

TEST(SubspaceAngle, Examples) {
  Matrix u(2, 1), v(2, 1), w(2, 1);
  u << 1, 0;
  v << 0, 1;
  w << std::cos(0.3), std::sin(0.3);
  EXPECT_EQ(subspace_angle(u, u), 0.0);
  EXPECT_NEAR(subspace_angle(u, v), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(subspace_angle(u, w), 0.3, 1e-15);
}

TEST(SubspaceAngle, SmallAnglesResolved) {
  Matrix u(3, 1), v(3, 1);
  u << 1, 0, 0;
  v << std::cos(1e-9), std::sin(1e-9), 0;
  EXPECT_NEAR(subspace_angle(u, v), 1e-9, 1e-20);
}

TEST(SubspaceAngle, DifferentColumnCounts) {
  const Matrix plane = Matrix::Identity(3, 2);
  Matrix line(3, 1);
  line << std::cos(0.2), 0, std::sin(0.2);
  EXPECT_NEAR(subspace_angle(plane, line), 0.2, 1e-14);
  EXPECT_NEAR(subspace_angle(line, plane), 0.2, 1e-14);
}

TEST(SubspaceAngle, RejectsNonOrthonormal) {
  Matrix u(2, 1), v(2, 1);
  u << 1, 1;
  v << 1, 0;
  EXPECT_THROW(subspace_angle(u, v), InputError);
  EXPECT_THROW(subspace_angle(Matrix::Identity(3, 1), Matrix::Identity(2, 1)), InputError);
}
