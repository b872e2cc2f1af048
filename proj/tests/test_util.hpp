#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gkconsist/kernel_core.hpp"

namespace gkconsist::testkit {

/// Cyclic Jacobi eigenvalue iteration. Test-only oracle, independent of the
/// Householder/QR path used by the library.
inline Vector jacobi_eigenvalues(Matrix a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  Vector ev = a.diagonal();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

/// Gaussian Gram matrix of `n` uniform points in [-1,1]^dim with bandwidth
/// `width`; PSD with unit diagonal.
inline KernelMatrix random_gaussian_kernel(std::mt19937_64& rng, Eigen::Index n, int dim,
                                           double width) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RowMajorMatrix pts(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) pts(i, k) = u(rng);
  return gaussian_gram(DataMatrix(pts), width);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

/// Smallest and largest singular values.
inline std::pair<double, double> singular_range(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  return {s.minCoeff(), s.maxCoeff()};
}

}  // namespace gkconsist::testkit
