#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "gkconsist/errors.hpp"
#include "gkconsist/estimators.hpp"
#include "gkconsist/kernel_core.hpp"
#include "gkconsist/scenario_io.hpp"
#include "gkconsist/spectral.hpp"
#include "gkconsist/synthesis.hpp"

namespace gkconsist {

inline constexpr std::string_view kCsvHeader =
    "scenario_id,d,trial,estimator,frob_error,max_entry_error,debias_eigenvalue,"
    "implied_noise,min_eig_estimate,subspace_angle_deg,seed,wall_ms,error_code";

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names{"raw", "full_noise", "partial_noise", "oracle"};
  return names;
}

struct ExperimentConfig {
  std::string scenario_id = "scenario";
  Scenario scenario;
  std::vector<std::size_t> dims;
  std::size_t trials = 1;
  std::vector<std::string> estimators;
  std::string output_path;
  double cond_threshold = kDefaultCondThreshold;

  void validate() const {
    scenario.validate();
    if (scenario_id.empty() || scenario_id.find_first_of(",\n\r\"") != std::string::npos) {
      throw ConfigError("config: scenario_id must be nonempty without commas or quotes");
    }
    if (dims.empty()) throw ConfigError("config: dims must be nonempty");
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (dims[i] == 0) throw ConfigError("config: dims must be positive");
      if (i > 0 && dims[i] <= dims[i - 1]) {
        throw ConfigError("config: dims must be strictly ascending");
      }
    }
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    if (estimators.empty()) throw ConfigError("config: no estimators requested");
    for (const auto& e : estimators) {
      const auto& known = known_estimators();
      if (std::find(known.begin(), known.end(), e) == known.end()) {
        throw ConfigError("config: unknown estimator '" + e + "'");
      }
      if (e == "partial_noise" &&
          (scenario.clean_prefix < 1 || scenario.clean_prefix + 1 > scenario.n())) {
        throw ConfigError("config: partial_noise requires 1 <= clean_prefix <= n-1");
      }
    }
    if (!(cond_threshold > 0.0)) throw ConfigError("config: cond_threshold must be positive");
  }
};

/// Estimators that apply to a scenario: partial_noise only with a proper clean prefix.
inline std::vector<std::string> default_estimators(const Scenario& sc) {
  std::vector<std::string> out{"raw", "full_noise"};
  if (sc.clean_prefix >= 1 && sc.clean_prefix + 1 <= sc.n()) out.push_back("partial_noise");
  out.push_back("oracle");
  return out;
}

/// Accepts either a full experiment config ({scenario: {...}, dims, ...}) or a
/// bare scenario document, in which case sweep settings take defaults.
inline ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    const bool bare = !j.contains("scenario");
    cfg.scenario = scenario_from_json(bare ? j : j.at("scenario"));
    cfg.scenario_id = j.value("scenario_id", std::string("scenario"));
    cfg.dims = j.value("dims", std::vector<std::size_t>{1000, 10000, 100000});
    cfg.trials = j.value("trials", std::size_t{20});
    cfg.estimators = j.contains("estimators")
                         ? j.at("estimators").get<std::vector<std::string>>()
                         : default_estimators(cfg.scenario);
    cfg.output_path = j.value("output_path", std::string());
    cfg.cond_threshold = j.value("cond_threshold", kDefaultCondThreshold);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline json config_to_json(const ExperimentConfig& cfg) {
  return {{"scenario_id", cfg.scenario_id},
          {"scenario", scenario_to_json(cfg.scenario)},
          {"dims", cfg.dims},
          {"trials", cfg.trials},
          {"estimators", cfg.estimators},
          {"output_path", cfg.output_path},
          {"cond_threshold", cfg.cond_threshold}};
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ReportRow {
  std::string scenario_id;
  std::size_t d = 0;
  std::uint64_t trial = 0;
  std::string estimator;
  double frob_error = kNaN;
  double max_entry_error = kNaN;
  double debias_eigenvalue = kNaN;
  double implied_noise = kNaN;
  double min_eig_estimate = kNaN;
  double subspace_angle_deg = kNaN;
  std::uint64_t seed = 0;
  std::int64_t wall_ms = 0;
  std::string error_code;

  bool ok() const noexcept { return error_code.empty(); }
};

using ConvergenceReport = std::vector<ReportRow>;

namespace detail {

inline EstimateResult run_estimator(const std::string& name, const KernelMatrix& kx,
                                    const ExperimentConfig& cfg) {
  const auto& sc = cfg.scenario;
  if (name == "raw") {
    const double lambda1 = smallest_eigenvalue(kx.matrix());
    std::optional<double> noise;
    if (lambda1 >= -1e-6 && lambda1 < 1.0) noise = noise_level_from_lambda(lambda1, sc.gamma);
    return {kx, lambda1, noise, EstimateMode::full_noise};
  }
  if (name == "full_noise") return estimate_full_noise(kx, sc.gamma);
  if (name == "partial_noise") {
    return estimate_partial_noise(PartitionedKernel(kx, sc.clean_prefix), cfg.cond_threshold,
                                  sc.gamma);
  }
  if (name == "oracle") return oracle_debias(kx, sc.noise.sigma_bar_sq, sc.gamma);
  throw ConfigError("unknown estimator '" + name + "'");
}

inline std::vector<ReportRow> run_cell(const ExperimentConfig& cfg, const KernelMatrix& target,
                                       std::size_t d, std::uint64_t trial) {
  const auto& sc = cfg.scenario;
  const DataMatrix x = observe(sc, d, trial);
  const KernelMatrix kx = gaussian_gram(x, scaling_parameter({sc.gamma}, d));

  std::vector<ReportRow> rows;
  for (const auto& name : cfg.estimators) {
    const auto t0 = std::chrono::steady_clock::now();
    ReportRow row;
    row.scenario_id = cfg.scenario_id;
    row.d = d;
    row.trial = trial;
    row.estimator = name;
    row.seed = sc.noise.seed;
    try {
      const EstimateResult est = run_estimator(name, kx, cfg);
      const Matrix diff = est.estimate.matrix() - target.matrix();
      row.frob_error = diff.norm();
      row.max_entry_error = max_abs_entry(diff);
      row.debias_eigenvalue = est.debias_eigenvalue;
      row.implied_noise = est.implied_noise.value_or(kNaN);
      row.min_eig_estimate = est.estimate.min_eigenvalue();
      row.subspace_angle_deg =
          top_subspace_angle(est.estimate.matrix(), target.matrix()) * 180.0 /
          std::numbers::pi;
    } catch (const Error& e) {
      const std::string id = row.scenario_id;
      row = ReportRow{};
      row.scenario_id = id;
      row.d = d;
      row.trial = trial;
      row.estimator = name;
      row.seed = sc.noise.seed;
      row.error_code = std::string(e.code());
    }
    row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Runs every (d, trial) cell, possibly on several threads, and returns rows
/// sorted by (d, trial, estimator). Output is independent of `workers`.
inline ConvergenceReport run_sweep(const ExperimentConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const KernelMatrix target = limit_gram(cfg.scenario.signals, cfg.scenario.gamma);

  const std::size_t cells = cfg.dims.size() * cfg.trials;
  std::vector<std::vector<ReportRow>> results(cells);
  std::vector<std::exception_ptr> failures(cells);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      try {
        results[c] = detail::run_cell(cfg, target, cfg.dims[c / cfg.trials], c % cfg.trials);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cells)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  ConvergenceReport report;
  report.reserve(cells * cfg.estimators.size());
  for (auto& r : results) {
    std::move(r.begin(), r.end(), std::back_inserter(report));
  }
  std::sort(report.begin(), report.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.d, a.trial, a.estimator) < std::tie(b.d, b.trial, b.estimator);
  });
  return report;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// 17 significant digits; NaN (metric unavailable) becomes an empty field.
inline std::string format_double(double v) {
  if (std::isnan(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const ConvergenceReport& report) {
  out << kCsvHeader << '\n';
  for (const auto& r : report) {
    out << r.scenario_id << ',' << r.d << ',' << r.trial << ',' << r.estimator << ','
        << format_double(r.frob_error) << ',' << format_double(r.max_entry_error) << ','
        << format_double(r.debias_eigenvalue) << ',' << format_double(r.implied_noise) << ','
        << format_double(r.min_eig_estimate) << ',' << format_double(r.subspace_angle_deg)
        << ',' << r.seed << ',' << r.wall_ms << ',' << r.error_code << '\n';
  }
}

inline std::string to_csv(const ConvergenceReport& report) {
  std::ostringstream os;
  write_csv(os, report);
  return os.str();
}

inline ConvergenceReport read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("read_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw InputError("read_csv: unexpected header");

  auto num = [](const std::string& s) { return s.empty() ? kNaN : std::stod(s); };
  ConvergenceReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 13) {
      throw InputError("read_csv: line " + std::to_string(lineno) + " has " +
                       std::to_string(f.size()) + " fields, expected 13");
    }
    try {
      ReportRow r;
      r.scenario_id = f[0];
      r.d = std::stoull(f[1]);
      r.trial = std::stoull(f[2]);
      r.estimator = f[3];
      r.frob_error = num(f[4]);
      r.max_entry_error = num(f[5]);
      r.debias_eigenvalue = num(f[6]);
      r.implied_noise = num(f[7]);
      r.min_eig_estimate = num(f[8]);
      r.subspace_angle_deg = num(f[9]);
      r.seed = std::stoull(f[10]);
      r.wall_ms = std::stoll(f[11]);
      r.error_code = f[12];
      report.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InputError("read_csv: malformed number on line " + std::to_string(lineno));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

/// Linear-interpolated quantile (the "type 7" definition) of unsorted values.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// Least-squares slope of log(y) against log(x); nullopt with fewer than two
/// usable points.
inline std::optional<double> loglog_slope(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      pts.emplace_back(std::log(x[i]), std::log(y[i]));
    }
  }
  if (pts.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (const auto& [a, b] : pts) {
    mx += a;
    my += b;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0, sxy = 0;
  for (const auto& [a, b] : pts) {
    sxx += (a - mx) * (a - mx);
    sxy += (a - mx) * (b - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

struct SummaryRow {
  std::string estimator;
  std::size_t d = 0;
  std::size_t ok_rows = 0;
  std::size_t error_rows = 0;
  double median_frob = kNaN;
  double iqr_frob = kNaN;
  double median_implied_noise = kNaN;
  std::optional<double> slope;  ///< log-log slope of median frob_error vs d, per estimator
};

inline std::vector<SummaryRow> summarize(const ConvergenceReport& report) {
  if (report.empty()) throw InputError("summarize: empty report");

  std::vector<std::string> estimators;
  for (const auto& r : report) {
    if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end()) {
      estimators.push_back(r.estimator);
    }
  }
  std::sort(estimators.begin(), estimators.end());

  std::vector<SummaryRow> out;
  for (const auto& est : estimators) {
    std::vector<std::size_t> dims;
    for (const auto& r : report) {
      if (r.estimator == est) dims.push_back(r.d);
    }
    std::sort(dims.begin(), dims.end());
    dims.erase(std::unique(dims.begin(), dims.end()), dims.end());

    const std::size_t first = out.size();
    std::vector<double> xs, ys;
    for (const auto d : dims) {
      SummaryRow s;
      s.estimator = est;
      s.d = d;
      std::vector<double> frob, noise;
      for (const auto& r : report) {
        if (r.estimator != est || r.d != d) continue;
        if (!r.ok()) {
          ++s.error_rows;
          continue;
        }
        ++s.ok_rows;
        if (!std::isnan(r.frob_error)) frob.push_back(r.frob_error);
        if (!std::isnan(r.implied_noise)) noise.push_back(r.implied_noise);
      }
      s.median_frob = median(frob);
      s.iqr_frob = frob.empty() ? kNaN : quantile(frob, 0.75) - quantile(frob, 0.25);
      s.median_implied_noise = median(noise);
      if (!std::isnan(s.median_frob)) {
        xs.push_back(static_cast<double>(d));
        ys.push_back(s.median_frob);
      }
      out.push_back(std::move(s));
    }
    const auto slope = loglog_slope(xs, ys);
    for (std::size_t i = first; i < out.size(); ++i) out[i].slope = slope;
  }
  return out;
}

inline void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string("null");
    std::ostringstream o;
    o << std::setprecision(6) << v;
    return o.str();
  };
  os << std::left << std::setw(14) << "estimator" << std::setw(10) << "d" << std::setw(6)
     << "ok" << std::setw(6) << "err" << std::setw(14) << "median_frob" << std::setw(14)
     << "iqr_frob" << std::setw(14) << "median_noise" << "slope\n";
  for (const auto& r : rows) {
    os << std::setw(14) << r.estimator << std::setw(10) << r.d << std::setw(6) << r.ok_rows
       << std::setw(6) << r.error_rows << std::setw(14) << cell(r.median_frob)
       << std::setw(14) << cell(r.iqr_frob) << std::setw(14)
       << cell(r.median_implied_noise) << cell(r.slope.value_or(kNaN)) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "estimator,d,ok_rows,error_rows,median_frob_error,iqr_frob_error,"
        "median_implied_noise,loglog_slope\n";
  for (const auto& r : rows) {
    os << r.estimator << ',' << r.d << ',' << r.ok_rows << ',' << r.error_rows << ','
       << format_double(r.median_frob) << ',' << format_double(r.iqr_frob) << ','
       << format_double(r.median_implied_noise) << ','
       << (r.slope ? format_double(*r.slope) : std::string()) << '\n';
  }
}

}  // namespace gkconsist
