#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gkconsist/errors.hpp"
#include "gkconsist/kernel_core.hpp"

namespace gkconsist {

inline constexpr double kDefaultCondThreshold = 1e8;

/// Ascending eigenvalues with aligned orthonormal eigenvector columns.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};

inline void require_symmetric(const Matrix& a, const char* who, double tol = 1e-12) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InputError(std::string(who) + ": matrix must be square and nonempty");
  }
  if (!a.allFinite()) throw InputError(std::string(who) + ": non-finite entries");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw InputError(std::string(who) + ": matrix is not symmetric");
  }
}

/// Full symmetric eigendecomposition (Householder tridiagonalization + QR,
/// via Eigen's SelfAdjointEigenSolver).
inline EigenDecomposition sym_eigen(const Matrix& a) {
  require_symmetric(a, "sym_eigen");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw DiagnosticsError("sym_eigen: eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double smallest_eigenvalue(const Matrix& a) {
  require_symmetric(a, "smallest_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw DiagnosticsError("smallest_eigenvalue: eigensolver did not converge");
  }
  return es.eigenvalues()(0);
}

/// Groups ascending eigenvalues into runs whose consecutive gaps are <= gap.
/// Each cluster is (first index, count).
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> eigen_clusters(
    const Vector& ascending, double gap = 1e-6) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= ascending.size(); ++i) {
    if (i == ascending.size() || ascending(i) - ascending(i - 1) > gap) {
      out.emplace_back(start, i - start);
      start = i;
    }
  }
  return out;
}

/// Largest principal angle between span(u) and span(v), in radians.
///
/// The cosine comes from the singular values of u^T v; the sine from the
/// residual of projecting the narrower basis onto the wider one. Combining
/// both through atan2 keeps small angles accurate.
inline double subspace_angle(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) throw InputError("subspace_angle: row count mismatch");
  if (u.cols() == 0 || v.cols() == 0) throw InputError("subspace_angle: empty basis");
  auto check = [](const Matrix& q, const char* name) {
    const Matrix g = q.transpose() * q - Matrix::Identity(q.cols(), q.cols());
    if (g.cwiseAbs().maxCoeff() > 1e-8) {
      throw InputError(std::string("subspace_angle: ") + name + " is not orthonormal");
    }
  };
  check(u, "u");
  check(v, "v");

  const Matrix& narrow = u.cols() <= v.cols() ? u : v;
  const Matrix& wide = u.cols() <= v.cols() ? v : u;

  Eigen::JacobiSVD<Matrix> cos_svd(wide.transpose() * narrow);
  const double cos_min = std::clamp(cos_svd.singularValues().minCoeff(), 0.0, 1.0);

  const Matrix residual = narrow - wide * (wide.transpose() * narrow);
  Eigen::JacobiSVD<Matrix> sin_svd(residual);
  const double sin_max = std::clamp(sin_svd.singularValues().maxCoeff(), 0.0, 1.0);

  return std::atan2(sin_max, cos_min);
}

/// Angle between the top eigen-cluster of `reference` and the same number of
/// leading eigenvectors of `estimate`.
inline double top_subspace_angle(const Matrix& estimate, const Matrix& reference,
                                 double cluster_gap = 1e-6) {
  const auto ref = sym_eigen(reference);
  const auto est = sym_eigen(estimate);
  const auto clusters = eigen_clusters(ref.values, cluster_gap);
  const auto [first, count] = clusters.back();
  return subspace_angle(est.vectors.rightCols(count), ref.vectors.middleCols(first, count));
}

// ---------------------------------------------------------------------------
// Partitioned kernels and block elimination
// ---------------------------------------------------------------------------

/// Kernel matrix split after its first `ell` rows/columns.
class PartitionedKernel {
 public:
  PartitionedKernel(KernelMatrix base, std::size_t ell) : base_(std::move(base)) {
    const auto n = static_cast<std::size_t>(base_.n());
    if (ell < 1 || ell + 1 > n) {
      throw ConfigError("PartitionedKernel: ell = " + std::to_string(ell) +
                        " outside [1, " + std::to_string(n > 0 ? n - 1 : 0) + "]");
    }
    ell_ = static_cast<Eigen::Index>(ell);
  }

  const KernelMatrix& base() const noexcept { return base_; }
  Eigen::Index n() const noexcept { return base_.n(); }
  Eigen::Index ell() const noexcept { return ell_; }
  Eigen::Index m() const noexcept { return base_.n() - ell_; }

  auto k11() const { return base_.matrix().topLeftCorner(ell_, ell_); }
  auto k12() const { return base_.matrix().topRightCorner(ell_, m()); }
  auto k21() const { return base_.matrix().bottomLeftCorner(m(), ell_); }
  auto k22() const { return base_.matrix().bottomRightCorner(m(), m()); }

 private:
  KernelMatrix base_;
  Eigen::Index ell_ = 1;
};

/// 2-norm condition number of a symmetric matrix; infinity if singular.
inline double symmetric_condition(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const Vector abs_ev = es.eigenvalues().cwiseAbs();
  const double lo = abs_ev.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return abs_ev.maxCoeff() / lo;
}

/// K22 - K21 K11^{-1} K12, symmetrized. K11 is factorized, never inverted.
inline Matrix schur_complement(const PartitionedKernel& p,
                               double cond_threshold = kDefaultCondThreshold) {
  if (!(cond_threshold > 0.0)) {
    throw InputError("schur_complement: cond_threshold must be positive");
  }
  const Matrix k11 = p.k11();
  const double cond = symmetric_condition(k11);
  if (!(cond <= cond_threshold)) {
    throw SingularityError("schur_complement: clean block K11 (" +
                           std::to_string(p.ell()) + "x" + std::to_string(p.ell()) +
                           ") has condition estimate " + std::to_string(cond) +
                           " above threshold " + std::to_string(cond_threshold));
  }
  const Eigen::LDLT<Matrix> ldlt(k11);
  if (ldlt.info() != Eigen::Success) {
    throw SingularityError("schur_complement: factorization of K11 failed");
  }
  const Matrix solved = ldlt.solve(Matrix(p.k12()));
  const Matrix s = p.k22() - p.k21() * solved;
  return 0.5 * (s + s.transpose());
}

struct LowRankPerturbation {
  Matrix delta;      ///< symmetric m x m correction to K22
  double norm = 0;   ///< Frobenius norm of delta
  double theta = 0;  ///< Schur eigenvalue of smallest magnitude
  Vector direction;  ///< its unit eigenvector
};

/// Minimal-Frobenius-norm symmetric perturbation of K22 that makes the whole
/// matrix rank deficient: delta = -theta u u^T for the Schur eigenpair with
/// the smallest |theta|.
inline LowRankPerturbation constrained_lowrank_delta(
    const PartitionedKernel& p, double cond_threshold = kDefaultCondThreshold) {
  const Matrix s = schur_complement(p, cond_threshold);
  const auto eig = sym_eigen(s);
  Eigen::Index best = 0;
  eig.values.cwiseAbs().minCoeff(&best);

  LowRankPerturbation out;
  out.theta = eig.values(best);
  out.direction = eig.vectors.col(best);
  const Matrix outer = out.direction * out.direction.transpose();
  out.delta = -out.theta * (0.5 * (outer + outer.transpose()));
  out.norm = out.delta.norm();
  return out;
}

/// [K11 K12; K21 K22 + delta]
inline Matrix assemble_with_delta(const PartitionedKernel& p, const Matrix& delta) {
  Matrix out = p.base().matrix();
  out.bottomRightCorner(p.m(), p.m()) += delta;
  return out;
}

}  // namespace gkconsist
