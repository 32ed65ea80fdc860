#pragma once

// Simulation study driver: simulate -> fit each variant -> ISSE and tail
// ISSE against the noiseless means -> cluster and score against the true
// groups. Shared by the CLI `replicate` command and the acceptance suite.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fks/cluster.hpp"
#include "fks/detail/parallel.hpp"
#include "fks/freeknot.hpp"
#include "fks/metrics.hpp"
#include "fks/simulate.hpp"
#include "fks/smoother.hpp"

namespace fks {

struct StudyConfig {
  ScenarioConfig scenario;
  int n_basis = 12;
  int order = 4;
  double lambda1 = kDefaultLambda1;
  double lambda2 = kDefaultLambda2;
  std::vector<Variant> variants{Variant::FS0, Variant::FS1, Variant::FS2};
  bool kmeans = true;
  bool hierarchical = true;
  Linkage linkage = Linkage::Ward;
  int k = 4;
  int k_max = 8;  // elbow range; 0 disables the elbow
  int restarts = 20;
  double tail_lo = 0.1;  // fractions of the domain width
  double tail_hi = 0.1;
  int grid_size = 50;

  void validate() const {
    scenario.validate();
    if (order < 2) throw Error(ErrorKind::OrderTooSmall, "cli", "order must be >= 2");
    if (n_basis <= order) throw Error(ErrorKind::InvalidConfig, "cli", "n_basis must exceed the order");
    if (variants.empty()) throw Error(ErrorKind::InvalidConfig, "cli", "no variants requested");
    if (k < 1 || restarts < 1 || (k_max != 0 && k_max < 2)) {
      throw Error(ErrorKind::InvalidConfig, "cli", "cluster settings out of range");
    }
    variant_config(Variant::FS2, lambda1, lambda2).validate();
    make_tails(scenario.lo, scenario.hi, tail_lo, tail_hi).validate();
  }

  KnotSearchConfig search() const {
    KnotSearchConfig s = fixed_basis_search(n_basis, order);
    s.grid_size = grid_size;
    return s;
  }
};

struct VariantOutcome {
  Variant variant = Variant::FS0;
  std::vector<double> knots;
  Diagnostics diagnostics;
  double isse = 0.0;
  double isse_inf = 0.0;
  double isse_sup = 0.0;
  double ari_kmeans = 0.0;
  double ari_hierarchical = 0.0;
  int elbow_k = 0;
  bool elbow_low_confidence = false;
};

struct ReplicationOutcome {
  std::uint64_t seed = 0;
  std::vector<VariantOutcome> variants;
};

/// One seed of the study; single-threaded.
inline ReplicationOutcome run_replication(const StudyConfig& config, std::uint64_t seed) {
  config.validate();
  ScenarioConfig sc = config.scenario;
  sc.seed = seed;
  const Scenario scenario = generate_scenario(sc);
  const auto tails = make_tails(sc.lo, sc.hi, config.tail_lo, config.tail_hi);

  ReplicationOutcome out;
  out.seed = seed;
  for (Variant v : config.variants) {
    const auto penalty = variant_config(v, config.lambda1, config.lambda2);
    const auto fk = add_knots_gradually(scenario.data, penalty, config.search());
    VariantOutcome o;
    o.variant = v;
    o.knots = fk.knots;
    o.diagnostics = fk.model.diagnostics;
    const auto fitted = spline_family(fk.model);
    o.isse = integrated_sse(scenario.truth, fitted, sc.lo, sc.hi, kDefaultQuadPanels, fk.knots);
    const auto local = local_isse(scenario.truth, fitted, tails, kDefaultQuadPanels, fk.knots);
    o.isse_inf = local.isse_inf;
    o.isse_sup = local.isse_sup;
    const Eigen::MatrixXd z = gram_features(fk.model);
    if (config.kmeans) {
      const auto km = kmeans_features(z, config.k, seed, config.restarts, 1, &fk.model.coeffs);
      o.ari_kmeans = adjusted_rand_index(km.partition.labels, scenario.labels);
    }
    if (config.hierarchical) {
      const auto hc = hierarchical_features(z, config.k, config.linkage, &fk.model.coeffs);
      o.ari_hierarchical = adjusted_rand_index(hc.partition.labels, scenario.labels);
    }
    if (config.k_max >= 2) {
      const auto elbow = elbow_features(z, config.k_max, seed, config.restarts, 1);
      o.elbow_k = elbow.suggested_k;
      o.elbow_low_confidence = elbow.low_confidence;
    }
    out.variants.push_back(std::move(o));
  }
  return out;
}

/// Seeds first_seed .. first_seed + count - 1, fanned out over threads;
/// results are ordered by seed.
inline std::vector<ReplicationOutcome> run_study(const StudyConfig& config, std::uint64_t first_seed, int count,
                                                 int threads = 1) {
  config.validate();
  if (count < 1) throw Error(ErrorKind::InvalidConfig, "cli", "replication count must be >= 1");
  std::vector<ReplicationOutcome> results(static_cast<std::size_t>(count));
  detail::parallel_for(results.size(), threads, [&](std::size_t i) {
    results[i] = run_replication(config, first_seed + i);
  });
  return results;
}

struct VariantSummary {
  Variant variant = Variant::FS0;
  int replications = 0;
  double median_isse = 0.0;
  double median_isse_inf = 0.0;
  double median_isse_sup = 0.0;
  double mean_isse = 0.0;
  double mean_df = 0.0;
  double mean_gcv = 0.0;
  double mean_ari_kmeans = 0.0;
  double mean_ari_hierarchical = 0.0;
  double elbow_hit_rate = 0.0;  // share of seeds where the elbow suggests k
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

inline std::vector<VariantSummary> summarize(const StudyConfig& config,
                                             const std::vector<ReplicationOutcome>& results) {
  std::vector<VariantSummary> out;
  for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
    std::vector<double> isse, inf, sup, df, gcv, km, hc;
    int hits = 0;
    for (const auto& r : results) {
      const auto& o = r.variants[vi];
      isse.push_back(o.isse);
      inf.push_back(o.isse_inf);
      sup.push_back(o.isse_sup);
      df.push_back(o.diagnostics.df);
      gcv.push_back(o.diagnostics.gcv);
      km.push_back(o.ari_kmeans);
      hc.push_back(o.ari_hierarchical);
      hits += o.elbow_k == config.k ? 1 : 0;
    }
    VariantSummary s;
    s.variant = config.variants[vi];
    s.replications = static_cast<int>(results.size());
    s.median_isse = detail::median(isse);
    s.median_isse_inf = detail::median(inf);
    s.median_isse_sup = detail::median(sup);
    s.mean_isse = detail::mean(isse);
    s.mean_df = detail::mean(df);
    s.mean_gcv = detail::mean(gcv);
    s.mean_ari_kmeans = detail::mean(km);
    s.mean_ari_hierarchical = detail::mean(hc);
    s.elbow_hit_rate = results.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(results.size());
    out.push_back(s);
  }
  return out;
}

}  // namespace fks
