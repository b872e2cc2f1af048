#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "gkconsist/errors.hpp"

namespace gkconsist {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// n samples of dimension d, one sample per row.
class DataMatrix {
 public:
  DataMatrix() = default;

  explicit DataMatrix(RowMajorMatrix rows) : rows_(std::move(rows)) {
    if (!rows_.allFinite()) {
      throw InputError("DataMatrix: entries must be finite");
    }
  }

  static DataMatrix zeros(Eigen::Index n, Eigen::Index d) {
    return DataMatrix(RowMajorMatrix::Zero(n, d));
  }

  Eigen::Index n() const noexcept { return rows_.rows(); }
  Eigen::Index d() const noexcept { return rows_.cols(); }

  auto row(Eigen::Index i) const { return rows_.row(i); }
  const RowMajorMatrix& rows() const noexcept { return rows_; }

 private:
  RowMajorMatrix rows_;
};

inline DataMatrix operator+(const DataMatrix& a, const DataMatrix& b) {
  if (a.n() != b.n() || a.d() != b.d()) {
    throw InputError("DataMatrix addition: shape mismatch");
  }
  return DataMatrix(a.rows() + b.rows());
}

/// Squared Euclidean distance by explicit differences with compensated
/// accumulation. Never uses the |x|^2 + |y|^2 - 2 x.y expansion.
template <typename RowA, typename RowB>
double squared_distance(const RowA& a, const RowB& b) {
  CompensatedSum acc;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double diff = a(k) - b(k);
    acc.add(diff * diff);
  }
  return acc.value();
}

template <typename RowA, typename RowB>
double inner_product(const RowA& a, const RowB& b) {
  CompensatedSum acc;
  for (Eigen::Index k = 0; k < a.size(); ++k) acc.add(a(k) * b(k));
  return acc.value();
}

/// Symmetric matrix with exact unit diagonal and finite nonnegative entries.
///
/// Gram matrices built by `gaussian_gram` additionally lie in (0, 1] and are
/// PSD; debiased estimates may leave that range slightly at finite d, so only
/// the structural invariants are enforced here and the rest is queryable.
class KernelMatrix {
 public:
  KernelMatrix() = default;

  explicit KernelMatrix(Matrix entries) : entries_(std::move(entries)) {
    validate();
  }

  static KernelMatrix identity(Eigen::Index n) {
    return KernelMatrix(Matrix::Identity(n, n));
  }
  static KernelMatrix ones(Eigen::Index n) {
    return KernelMatrix(Matrix::Ones(n, n));
  }

  Eigen::Index n() const noexcept { return entries_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  const Matrix& matrix() const noexcept { return entries_; }

  bool in_unit_range() const {
    return (entries_.array() > 0.0).all() && (entries_.array() <= 1.0).all();
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

  /// smallest eigenvalue >= -tol * largest
  bool is_psd(double rel_tol = 1e-10) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return ev(0) >= -rel_tol * std::abs(ev(ev.size() - 1));
  }

 private:
  void validate() const {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
      throw InputError("KernelMatrix: must be square and nonempty");
    }
    if (!entries_.allFinite()) {
      throw InputError("KernelMatrix: entries must be finite");
    }
    const Eigen::Index n = entries_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (entries_(i, i) != 1.0) {
        throw InputError("KernelMatrix: diagonal entry " + std::to_string(i) +
                         " is not exactly 1");
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (entries_(i, j) != entries_(j, i)) {
          throw InputError("KernelMatrix: not exactly symmetric");
        }
        if (entries_(i, j) < 0.0) {
          throw InputError("KernelMatrix: negative entry");
        }
      }
    }
  }

  Matrix entries_;
};

struct ScalingRule {
  double gamma = 1.0;
};

/// c_d = gamma * d.
inline double scaling_parameter(ScalingRule rule, std::size_t d) {
  if (!(rule.gamma > 0.0) || !std::isfinite(rule.gamma)) {
    throw InputError("scaling_parameter: gamma must be positive");
  }
  if (d == 0) throw InputError("scaling_parameter: d must be >= 1");
  return rule.gamma * static_cast<double>(d);
}

/// K_ij = exp(-|x_i - x_j|^2 / c_d). Each pair is evaluated once and mirrored.
inline KernelMatrix gaussian_gram(const DataMatrix& data, double c_d) {
  if (!(c_d > 0.0) || !std::isfinite(c_d)) {
    throw InputError("gaussian_gram: c_d must be positive");
  }
  if (data.n() < 1) throw InputError("gaussian_gram: need at least one row");
  if (!data.rows().allFinite()) throw InputError("gaussian_gram: non-finite data");

  const Eigen::Index n = data.n();
  Matrix k = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-squared_distance(data.row(i), data.row(j)) / c_d);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return KernelMatrix(std::move(k));
}

/// Linear-kernel Gram matrix x_i^T x_j.
inline Matrix linear_gram(const DataMatrix& data) {
  if (data.n() < 1) throw InputError("linear_gram: need at least one row");
  if (!data.rows().allFinite()) throw InputError("linear_gram: non-finite data");

  const Eigen::Index n = data.n();
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = inner_product(data.row(i), data.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

inline KernelMatrix hadamard(const KernelMatrix& a, const KernelMatrix& b) {
  if (a.n() != b.n()) throw InputError("hadamard: dimension mismatch");
  return KernelMatrix(a.matrix().cwiseProduct(b.matrix()));
}

inline double max_abs_entry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace gkconsist
