#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "gkconsist/errors.hpp"
#include "gkconsist/kernel_core.hpp"
#include "gkconsist/spectral.hpp"

namespace gkconsist {

/// Guard on 1 - lambda before dividing by it.
inline constexpr double kDebiasEpsilon = 1e-6;

enum class EstimateMode { full_noise, partial_noise, oracle };

inline std::string_view to_string(EstimateMode m) {
  switch (m) {
    case EstimateMode::full_noise: return "full_noise";
    case EstimateMode::partial_noise: return "partial_noise";
    case EstimateMode::oracle: return "oracle";
  }
  return "unknown";
}

struct EstimateResult {
  KernelMatrix estimate;
  double debias_eigenvalue = 0.0;       ///< lambda_1 or tau_1 actually used
  std::optional<double> implied_noise;  ///< sigma^2 estimate, when gamma is known
  EstimateMode mode = EstimateMode::full_noise;
};

/// sigma^2 = -(gamma / 2) ln(1 - lambda1), inverting lambda1 = 1 - exp(-2 sigma^2 / gamma).
/// Values in [-1e-6, 0) are treated as roundoff and clamped to 0.
inline double noise_level_from_lambda(double lambda1, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("noise_level_from_lambda: gamma must be positive");
  if (!(lambda1 >= -1e-6) || !(lambda1 < 1.0)) {
    throw DomainError("noise_level_from_lambda: lambda1 = " + std::to_string(lambda1) +
                      " outside [0, 1)");
  }
  if (lambda1 <= 0.0) return 0.0;
  return -0.5 * gamma * std::log1p(-lambda1);
}

namespace detail {

inline void require_debias_defined(double lambda, double eps, const char* who) {
  if (!(lambda < 1.0 - eps)) {
    throw DebiasUndefinedError(std::string(who) + ": debiasing eigenvalue " +
                               std::to_string(lambda) +
                               " is too close to 1; kernel is indistinguishable from identity");
  }
}

inline std::optional<double> implied_noise_or_none(double lambda,
                                                   std::optional<double> gamma) {
  if (!gamma) return std::nullopt;
  if (lambda < -1e-6 || lambda >= 1.0) return std::nullopt;
  return noise_level_from_lambda(lambda, *gamma);
}

/// (K - I) * scale + I with an exact unit diagonal.
inline Matrix rescale_off_diagonal(const Matrix& k, double scale) {
  Matrix out = k * scale;
  out.diagonal().setOnes();
  return out;
}

}  // namespace detail

/// Smallest-eigenvalue debiasing for fully noisy data:
/// K~ = (1 - lambda_1)^{-1} (K - I) + I.
inline EstimateResult estimate_full_noise(const KernelMatrix& k,
                                          std::optional<double> gamma = std::nullopt,
                                          double eps = kDebiasEpsilon) {
  const double lambda1 = smallest_eigenvalue(k.matrix());
  detail::require_debias_defined(lambda1, eps, "estimate_full_noise");
  EstimateResult r{
      KernelMatrix(detail::rescale_off_diagonal(k.matrix(), 1.0 / (1.0 - lambda1))),
      lambda1, detail::implied_noise_or_none(lambda1, gamma), EstimateMode::full_noise};
  return r;
}

/// Schur-complement debiasing for data whose first ell rows are noise free.
///
/// tau_1 is the smallest algebraic eigenvalue of K22 - K21 K11^{-1} K12.
/// Negative tau_1 down to -1e-10 is roundoff and clamped to 0; below -1e-6
/// the Schur complement is not PSD in any meaningful sense and a
/// DiagnosticsError is raised. Values in between are used as computed.
///
///   K~11 = K11
///   K~12 = (1 - tau_1)^{-1/2} K12,   K~21 = K~12^T
///   K~22 = (1 - tau_1)^{-1} (K22 - I) + I
inline EstimateResult estimate_partial_noise(const PartitionedKernel& p,
                                             double cond_threshold = kDefaultCondThreshold,
                                             std::optional<double> gamma = std::nullopt,
                                             double eps = kDebiasEpsilon) {
  const Matrix s = schur_complement(p, cond_threshold);
  double tau1 = smallest_eigenvalue(s);
  if (tau1 < -1e-6) {
    throw DiagnosticsError("estimate_partial_noise: Schur complement has eigenvalue " +
                           std::to_string(tau1) + " below -1e-6");
  }
  if (tau1 < 0.0 && tau1 >= -1e-10) tau1 = 0.0;
  detail::require_debias_defined(tau1, eps, "estimate_partial_noise");

  const Eigen::Index ell = p.ell();
  const Eigen::Index m = p.m();
  const double cross_scale = 1.0 / std::sqrt(1.0 - tau1);
  const double noisy_scale = 1.0 / (1.0 - tau1);

  Matrix out(p.n(), p.n());
  out.topLeftCorner(ell, ell) = p.k11();
  out.topRightCorner(ell, m) = cross_scale * p.k12();
  out.bottomLeftCorner(m, ell) = out.topRightCorner(ell, m).transpose();
  out.bottomRightCorner(m, m) = detail::rescale_off_diagonal(Matrix(p.k22()), noisy_scale);

  return {KernelMatrix(std::move(out)), tau1, detail::implied_noise_or_none(tau1, gamma),
          EstimateMode::partial_noise};
}

/// Known-noise inversion of the limit law: K~ = exp(2 sigma^2 / gamma) (K - I) + I.
inline EstimateResult oracle_debias(const KernelMatrix& k, double sigma_bar_sq,
                                    double gamma) {
  if (!(gamma > 0.0)) throw InputError("oracle_debias: gamma must be positive");
  if (!(sigma_bar_sq >= 0.0)) throw InputError("oracle_debias: sigma_bar_sq must be >= 0");
  const double factor = std::exp(2.0 * sigma_bar_sq / gamma);
  return {KernelMatrix(detail::rescale_off_diagonal(k.matrix(), factor)),
          1.0 - 1.0 / factor, sigma_bar_sq, EstimateMode::oracle};
}

}  // namespace gkconsist
