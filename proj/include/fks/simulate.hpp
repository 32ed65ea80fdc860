#pragma once

// Four-group synthetic scenario: noisy samples of four mean curves on a
// shared random grid over [0, 5].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fks/error.hpp"
#include "fks/metrics.hpp"
#include "fks/smoother.hpp"

namespace fks {

inline constexpr int kScenarioGroups = 4;

inline double mean_function(int group, double t) {
  switch (group) {
    case 1: return -2.0 * std::sin(t - 1.0) * std::log(t + 0.5);
    case 2: return 2.0 * std::cos(t) * std::log(t + 0.5);
    case 3: return -0.5 - 0.2 * std::cos(0.5 * (t - 1.0)) * std::pow(t, 1.5) * std::sqrt(5.0 * std::sqrt(t) + 0.5);
    case 4: return 1.2 * std::cos(t) * std::log(t + 0.5) * std::sqrt(t + 0.5);
    default:
      throw Error(ErrorKind::UnknownGroup, "simulate", "group id must be 1..4, got " + std::to_string(group));
  }
}

struct ScenarioConfig {
  int curves_per_group = 50;
  int points = 50;
  double lo = 0.0;
  double hi = 5.0;
  double noise_sd = 0.1;
  // noise sd at t scales by (1 + |mean(t)|) / 2
  bool heteroscedastic = false;
  std::uint64_t seed = 1;

  void validate() const {
    if (curves_per_group < 1 || points < 2) {
      throw Error(ErrorKind::InvalidConfig, "simulate", "counts must be positive (points >= 2)");
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
      throw Error(ErrorKind::InvalidConfig, "simulate", "noise_sd must be finite and >= 0");
    }
    if (!(lo < hi) || lo < 0.0) {
      throw Error(ErrorKind::InvalidConfig, "simulate", "domain must satisfy 0 <= lo < hi");
    }
  }
};

struct Scenario {
  FunctionalDataset data;
  std::vector<int> labels;  // group id 1..4 per curve
  CurveFamily truth;        // noiseless group means per curve
};

inline Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(config.lo, config.hi);
  std::normal_distribution<double> noise(0.0, 1.0);

  const int h = config.points;
  std::vector<double> t;
  while (static_cast<int>(t.size()) < h) {
    t.push_back(unif(rng));
    if (static_cast<int>(t.size()) == h) {
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
    }
  }

  const int n = kScenarioGroups * config.curves_per_group;
  Scenario s;
  s.labels.resize(n);
  s.data.t = t;
  s.data.lo = config.lo;
  s.data.hi = config.hi;
  s.data.y.resize(h, n);
  for (int j = 0; j < n; ++j) {
    const int group = 1 + j / config.curves_per_group;
    s.labels[j] = group;
    for (int i = 0; i < h; ++i) {
      const double m = mean_function(group, t[i]);
      const double sd = config.heteroscedastic ? config.noise_sd * (1.0 + std::abs(m)) / 2.0 : config.noise_sd;
      s.data.y(i, j) = m + sd * noise(rng);
    }
  }
  s.truth = function_family([labels = s.labels](int j, double x) { return mean_function(labels[j], x); }, n);
  return s;
}

}  // namespace fks
