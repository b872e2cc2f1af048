#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gkconsist/errors.hpp"
#include "gkconsist/kernel_core.hpp"

namespace gkconsist {

// ---------------------------------------------------------------------------
// Signals: trigonometric polynomials sampled at interval midpoints
// ---------------------------------------------------------------------------

/// a * sin(2 pi h t) + b * cos(2 pi h t)
struct Harmonic {
  int h = 1;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Harmonic&, const Harmonic&) = default;
};

using SignalFunction = std::vector<Harmonic>;

class SignalEnsemble {
 public:
  SignalEnsemble() = default;

  explicit SignalEnsemble(std::vector<SignalFunction> signals)
      : signals_(std::move(signals)) {
    if (signals_.empty()) throw InputError("SignalEnsemble: no signals");
    for (std::size_t i = 0; i < signals_.size(); ++i) {
      const auto& f = signals_[i];
      const auto tag = "SignalEnsemble: signal " + std::to_string(i + 1);
      if (f.empty()) throw InputError(tag + " has no harmonics");
      std::set<int> seen;
      bool nonzero = false;
      for (const auto& hm : f) {
        if (hm.h < 1) throw InputError(tag + " has a non-positive harmonic index");
        if (!std::isfinite(hm.a) || !std::isfinite(hm.b)) {
          throw InputError(tag + " has a non-finite coefficient");
        }
        if (!seen.insert(hm.h).second) {
          throw InputError(tag + " repeats harmonic " + std::to_string(hm.h));
        }
        nonzero = nonzero || hm.a != 0.0 || hm.b != 0.0;
      }
      if (!nonzero) throw InputError(tag + " is identically zero");
    }
  }

  std::size_t n() const noexcept { return signals_.size(); }
  const SignalFunction& operator[](std::size_t i) const { return signals_[i]; }
  const std::vector<SignalFunction>& signals() const noexcept { return signals_; }

 private:
  std::vector<SignalFunction> signals_;
};

inline double evaluate(const SignalFunction& f, double t) {
  double v = 0.0;
  for (const auto& hm : f) {
    const double w = 2.0 * std::numbers::pi * hm.h * t;
    v += hm.a * std::sin(w) + hm.b * std::cos(w);
  }
  return v;
}

/// Squared L2([0,1]) distance between two trig polynomials, in closed form.
inline double l2_distance_sq(const SignalFunction& f, const SignalFunction& g) {
  std::vector<std::pair<int, std::pair<double, double>>> diff;
  auto accumulate = [&diff](const SignalFunction& s, double sign) {
    for (const auto& hm : s) {
      auto it = std::find_if(diff.begin(), diff.end(),
                             [&](const auto& e) { return e.first == hm.h; });
      if (it == diff.end()) {
        diff.push_back({hm.h, {sign * hm.a, sign * hm.b}});
      } else {
        it->second.first += sign * hm.a;
        it->second.second += sign * hm.b;
      }
    }
  };
  accumulate(f, 1.0);
  accumulate(g, -1.0);
  double sum = 0.0;
  for (const auto& [h, ab] : diff) sum += ab.first * ab.first + ab.second * ab.second;
  return 0.5 * sum;
}

/// s_{i,k} = f_i((k - 1/2) / d), k = 1..d.
inline DataMatrix sample_signals(const SignalEnsemble& ens, std::size_t d) {
  if (d == 0) throw InputError("sample_signals: d must be >= 1");
  if (ens.n() == 0) throw InputError("sample_signals: empty ensemble");
  const auto n = static_cast<Eigen::Index>(ens.n());
  const auto cols = static_cast<Eigen::Index>(d);
  RowMajorMatrix s(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = ens[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < cols; ++k) {
      s(i, k) = evaluate(f, (static_cast<double>(k) + 0.5) / static_cast<double>(d));
    }
  }
  return DataMatrix(std::move(s));
}

/// Closed-form d -> infinity Gram matrix: exp(-|f_i - f_j|^2_{L2} / gamma).
inline KernelMatrix limit_gram(const SignalEnsemble& ens, double gamma) {
  if (!(gamma > 0.0)) throw InputError("limit_gram: gamma must be positive");
  const auto n = static_cast<Eigen::Index>(ens.n());
  Matrix k = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-l2_distance_sq(ens[static_cast<std::size_t>(i)],
                                                 ens[static_cast<std::size_t>(j)]) /
                                gamma);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return KernelMatrix(std::move(k));
}

/// Deterministic ensemble of n distinct signals used by presets and tests:
/// f_i = cos(phi_i) sin(2 pi t) + sin(phi_i) cos(2 pi t) + 0.4 sin(2 pi (i+1) t)
/// with phi_i = pi (i-1) / n (1-based i).
inline SignalEnsemble demo_ensemble(std::size_t n) {
  std::vector<SignalFunction> fs;
  fs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    fs.push_back({{1, std::cos(phi), std::sin(phi)},
                  {static_cast<int>(i) + 2, 0.4, 0.0}});
  }
  return SignalEnsemble(std::move(fs));
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseFamily { gaussian_iid, uniform_iid, gaussian_hetero };

inline std::string_view to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian_iid: return "gaussian_iid";
    case NoiseFamily::uniform_iid: return "uniform_iid";
    case NoiseFamily::gaussian_hetero: return "gaussian_hetero";
  }
  return "unknown";
}

inline NoiseFamily parse_noise_family(std::string_view s) {
  if (s == "gaussian_iid") return NoiseFamily::gaussian_iid;
  if (s == "uniform_iid") return NoiseFamily::uniform_iid;
  if (s == "gaussian_hetero") return NoiseFamily::gaussian_hetero;
  throw ConfigError("unknown noise family '" + std::string(s) + "'");
}

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian_iid;
  double sigma_bar_sq = 0.0;
  double hetero_amplitude = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(sigma_bar_sq >= 0.0) || !std::isfinite(sigma_bar_sq)) {
      throw ConfigError("NoiseSpec: sigma_bar_sq must be a finite nonnegative number");
    }
    if (!(hetero_amplitude >= 0.0 && hetero_amplitude < 1.0)) {
      throw ConfigError("NoiseSpec: hetero_amplitude must lie in [0, 1)");
    }
  }

  /// Per-coordinate variance sigma_k^2, k = 1..d.
  double coordinate_variance(std::size_t k, std::size_t d) const {
    if (family != NoiseFamily::gaussian_hetero) return sigma_bar_sq;
    return sigma_bar_sq *
           (1.0 + hetero_amplitude * std::sin(2.0 * std::numbers::pi *
                                              static_cast<double>(k) /
                                              static_cast<double>(d)));
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Independent generator for one (seed, trial, row) triple.
inline std::mt19937_64 row_stream(std::uint64_t seed, std::uint64_t trial,
                                  std::uint64_t row) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ trial);
  h = detail::splitmix64(h ^ (row + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(row)};
  return std::mt19937_64(seq);
}

/// n rows of zero-mean noise with coordinate variances per the family.
inline DataMatrix sample_noise(const NoiseSpec& spec, std::size_t n, std::size_t d,
                               std::uint64_t trial) {
  spec.validate();
  if (d == 0) throw InputError("sample_noise: d must be >= 1");
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(d);
  RowMajorMatrix xi = RowMajorMatrix::Zero(rows, cols);
  if (spec.sigma_bar_sq == 0.0) return DataMatrix(std::move(xi));

  for (Eigen::Index i = 0; i < rows; ++i) {
    auto gen = row_stream(spec.seed, trial, static_cast<std::uint64_t>(i));
    switch (spec.family) {
      case NoiseFamily::gaussian_iid: {
        std::normal_distribution<double> dist(0.0, std::sqrt(spec.sigma_bar_sq));
        for (Eigen::Index k = 0; k < cols; ++k) xi(i, k) = dist(gen);
        break;
      }
      case NoiseFamily::uniform_iid: {
        const double w = std::sqrt(3.0 * spec.sigma_bar_sq);
        std::uniform_real_distribution<double> dist(-w, w);
        for (Eigen::Index k = 0; k < cols; ++k) xi(i, k) = dist(gen);
        break;
      }
      case NoiseFamily::gaussian_hetero: {
        std::normal_distribution<double> dist(0.0, 1.0);
        for (Eigen::Index k = 0; k < cols; ++k) {
          const double var = spec.coordinate_variance(static_cast<std::size_t>(k) + 1, d);
          xi(i, k) = std::sqrt(var) * dist(gen);
        }
        break;
      }
      default:
        throw ConfigError("sample_noise: unknown noise family");
    }
  }
  return DataMatrix(std::move(xi));
}

// ---------------------------------------------------------------------------
// Scenario: signals + noise + clean prefix
// ---------------------------------------------------------------------------

/// Scenario with duplicate pairs already applied to `signals`. Indices in
/// `duplicate_pairs` are 0-based here; the JSON form is 1-based.
struct Scenario {
  SignalEnsemble signals;
  NoiseSpec noise;
  std::size_t clean_prefix = 0;
  double gamma = 1.0;
  std::vector<std::pair<std::size_t, std::size_t>> duplicate_pairs;

  std::size_t n() const noexcept { return signals.n(); }
  std::size_t noisy_count() const noexcept { return n() - clean_prefix; }

  void validate() const {
    noise.validate();
    if (signals.n() == 0) throw ConfigError("Scenario: no signals");
    if (clean_prefix > n()) {
      throw ConfigError("Scenario: clean_prefix " + std::to_string(clean_prefix) +
                        " outside [0, " + std::to_string(n()) + "]");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw ConfigError("Scenario: gamma must be positive");
    }
    for (const auto& [i, j] : duplicate_pairs) {
      if (i >= n() || j >= n() || i == j) {
        throw ConfigError("Scenario: invalid duplicate pair");
      }
    }
  }
};

/// Builds a scenario, copying signal i's coefficients onto signal j for every
/// (i, j) in `duplicate_pairs` (0-based). Raw signals being overwritten may be
/// empty.
inline Scenario make_scenario(std::vector<SignalFunction> raw, NoiseSpec noise,
                              std::size_t clean_prefix, double gamma,
                              std::vector<std::pair<std::size_t, std::size_t>> duplicate_pairs) {
  for (const auto& [i, j] : duplicate_pairs) {
    if (i >= raw.size() || j >= raw.size() || i == j) {
      throw ConfigError("make_scenario: invalid duplicate pair");
    }
    raw[j] = raw[i];
  }
  Scenario sc;
  try {
    sc.signals = SignalEnsemble(std::move(raw));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  sc.noise = noise;
  sc.clean_prefix = clean_prefix;
  sc.gamma = gamma;
  sc.duplicate_pairs = std::move(duplicate_pairs);
  sc.validate();
  return sc;
}

struct Observation {
  DataMatrix signals;
  DataMatrix noise;
  DataMatrix observed;
};

/// Samples signals and noise for one (d, trial) and forms x_i. Noise row i is
/// always drawn from stream (seed, trial, i) whether or not row i is clean.
inline Observation simulate(const Scenario& sc, std::size_t d, std::uint64_t trial) {
  sc.validate();
  DataMatrix s = sample_signals(sc.signals, d);
  DataMatrix xi = sample_noise(sc.noise, sc.n(), d, trial);
  RowMajorMatrix x = s.rows();
  const auto ell = static_cast<Eigen::Index>(sc.clean_prefix);
  const auto rows = x.rows();
  x.bottomRows(rows - ell) += xi.rows().bottomRows(rows - ell);
  return {std::move(s), std::move(xi), DataMatrix(std::move(x))};
}

/// x_i = s_i for i <= l, s_i + xi_i otherwise.
inline DataMatrix observe(const Scenario& sc, std::size_t d, std::uint64_t trial) {
  return simulate(sc, d, trial).observed;
}

// ---------------------------------------------------------------------------
// Empirical check of the noise assumptions
// ---------------------------------------------------------------------------

struct AssumptionReport {
  Vector noise_sq_norms;    ///< d^-1 |xi_i|^2
  Matrix noise_cross;       ///< d^-1 xi_i^T xi_j (diagonal zeroed)
  Matrix signal_noise;      ///< d^-1 s_i^T xi_j
  double max_norm_deviation = 0.0;
  double max_cross_deviation = 0.0;
  double max_signal_noise_deviation = 0.0;
};

inline AssumptionReport check_assumptions(const DataMatrix& signals,
                                          const DataMatrix& noise,
                                          double sigma_bar_sq) {
  if (signals.n() != noise.n() || signals.d() != noise.d()) {
    throw InputError("check_assumptions: signal/noise dimension mismatch");
  }
  const Eigen::Index n = noise.n();
  const double inv_d = 1.0 / static_cast<double>(noise.d());

  AssumptionReport r;
  r.noise_sq_norms.resize(n);
  r.noise_cross = Matrix::Zero(n, n);
  r.signal_noise.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.noise_sq_norms(i) = inv_d * inner_product(noise.row(i), noise.row(i));
    r.max_norm_deviation =
        std::max(r.max_norm_deviation, std::abs(r.noise_sq_norms(i) - sigma_bar_sq));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = inv_d * inner_product(noise.row(i), noise.row(j));
      r.noise_cross(i, j) = c;
      r.noise_cross(j, i) = c;
      r.max_cross_deviation = std::max(r.max_cross_deviation, std::abs(c));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double c = inv_d * inner_product(signals.row(i), noise.row(j));
      r.signal_noise(i, j) = c;
      r.max_signal_noise_deviation = std::max(r.max_signal_noise_deviation, std::abs(c));
    }
  }
  return r;
}

}  // namespace gkconsist
