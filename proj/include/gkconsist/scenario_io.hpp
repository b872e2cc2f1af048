#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gkconsist/errors.hpp"
#include "gkconsist/synthesis.hpp"

namespace gkconsist {

using json = nlohmann::json;

// Scenario JSON layout (indices 1-based):
//   {n, gamma, sigma_bar_sq, noise_family, hetero_amplitude, clean_prefix, seed,
//    signals: [{harmonics: [{h, a, b}]}], duplicate_pairs: [[i, j]]}

inline json scenario_to_json(const Scenario& sc) {
  json signals = json::array();
  for (const auto& f : sc.signals.signals()) {
    json hs = json::array();
    for (const auto& hm : f) hs.push_back({{"h", hm.h}, {"a", hm.a}, {"b", hm.b}});
    signals.push_back({{"harmonics", hs}});
  }
  json pairs = json::array();
  for (const auto& [i, j] : sc.duplicate_pairs) pairs.push_back({i + 1, j + 1});
  return {{"n", sc.n()},
          {"gamma", sc.gamma},
          {"sigma_bar_sq", sc.noise.sigma_bar_sq},
          {"noise_family", std::string(to_string(sc.noise.family))},
          {"hetero_amplitude", sc.noise.hetero_amplitude},
          {"clean_prefix", sc.clean_prefix},
          {"seed", sc.noise.seed},
          {"signals", signals},
          {"duplicate_pairs", pairs}};
}

inline Scenario scenario_from_json(const json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto& sigs = j.at("signals");
    if (!sigs.is_array() || sigs.size() != n) {
      throw ConfigError("scenario: 'signals' must be an array of length n = " +
                        std::to_string(n));
    }
    std::vector<SignalFunction> raw;
    raw.reserve(n);
    for (const auto& s : sigs) {
      SignalFunction f;
      for (const auto& hm : s.at("harmonics")) {
        f.push_back({hm.at("h").get<int>(), hm.value("a", 0.0), hm.value("b", 0.0)});
      }
      raw.push_back(std::move(f));
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& pr : j.value("duplicate_pairs", json::array())) {
      if (!pr.is_array() || pr.size() != 2) {
        throw ConfigError("scenario: duplicate_pairs entries must be [i, j]");
      }
      const auto i = pr[0].get<std::int64_t>();
      const auto k = pr[1].get<std::int64_t>();
      if (i < 1 || k < 1 || i > static_cast<std::int64_t>(n) ||
          k > static_cast<std::int64_t>(n)) {
        throw ConfigError("scenario: duplicate pair index out of range [1, n]");
      }
      pairs.emplace_back(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(k - 1));
    }

    NoiseSpec noise;
    noise.family = parse_noise_family(j.value("noise_family", std::string("gaussian_iid")));
    noise.sigma_bar_sq = j.at("sigma_bar_sq").get<double>();
    noise.hetero_amplitude = j.value("hetero_amplitude", 0.0);
    noise.seed = j.value("seed", std::uint64_t{0});

    const auto ell = j.value("clean_prefix", std::int64_t{0});
    if (ell < 0) throw ConfigError("scenario: clean_prefix must be >= 0");
    return make_scenario(std::move(raw), noise, static_cast<std::size_t>(ell),
                         j.value("gamma", 1.0), std::move(pairs));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

inline std::vector<std::string> preset_names() {
  return {"fully-noisy", "partial-noise-3x3", "hetero", "full-rank-bias"};
}

/// Built-in scenarios.
///   fully-noisy        4 demo signals, f4 := f1, sigma^2 = 0.25, no clean rows
///   partial-noise-3x3  f1 = sin, f2 = cos, f3 := f1, sigma^2 = 0.5, one clean row
///   hetero             as fully-noisy with heteroscedastic noise (amplitude 0.5)
///   full-rank-bias     4 distinct demo signals, sigma^2 = 0.25
inline Scenario preset_scenario(std::string_view name, std::uint64_t seed = 20240101) {
  const auto demo = demo_ensemble(4).signals();
  NoiseSpec noise{NoiseFamily::gaussian_iid, 0.25, 0.0, seed};
  if (name == "fully-noisy") {
    return make_scenario(demo, noise, 0, 1.0, {{0, 3}});
  }
  if (name == "partial-noise-3x3") {
    noise.sigma_bar_sq = 0.5;
    return make_scenario({{{1, 1.0, 0.0}}, {{1, 0.0, 1.0}}, {}}, noise, 1, 1.0, {{0, 2}});
  }
  if (name == "hetero") {
    noise.family = NoiseFamily::gaussian_hetero;
    noise.hetero_amplitude = 0.5;
    return make_scenario(demo, noise, 0, 1.0, {{0, 3}});
  }
  if (name == "full-rank-bias") {
    return make_scenario(demo, noise, 0, 1.0, {});
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace gkconsist
