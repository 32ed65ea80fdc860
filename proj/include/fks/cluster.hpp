#pragma once

// Curve clustering on fitted coefficients. Distances are L2 distances
// between curves, d(i, j)^2 = (c_i - c_j)^T G (c_i - c_j) with G the Gram
// matrix of the basis; with G = L L^T this is Euclidean on z = L^T c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "fks/detail/parallel.hpp"
#include "fks/error.hpp"
#include "fks/penalty.hpp"
#include "fks/smoother.hpp"

namespace fks {

struct Partition {
  std::vector<int> labels;  // 1..k
  int k = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

struct ClusterResult {
  Partition partition;
  Eigen::MatrixXd centroids;  // coefficient vectors, one column per cluster
  double within = 0.0;        // W(k): sum of squared distances to centroids
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<double> history;  // W after each Lloyd iteration (k-means only)
};

/// Feature matrix (n_B x n) whose Euclidean geometry is the L2 geometry of
/// the fitted curves.
inline Eigen::MatrixXd gram_features(const FitModel& model) {
  const Eigen::MatrixXd gram = penalty_matrix(model.spec, 0).values;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "cluster", "basis Gram matrix is not positive definite");
  }
  return llt.matrixU() * model.coeffs;
}

namespace detail {

struct KMeansRun {
  std::vector<int> assign;  // 0-based
  Eigen::MatrixXd centers;  // d x k
  double within = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> history;
};

inline int nearest(const Eigen::MatrixXd& centers, const Eigen::VectorXd& z, double* dist2) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.cols(); ++c) {
    const double d = (centers.col(c) - z).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = bd;
  return best;
}

inline KMeansRun lloyd(const Eigen::MatrixXd& z, Eigen::MatrixXd centers, int max_iter = 300) {
  const Eigen::Index n = z.cols();
  const Eigen::Index k = centers.cols();
  KMeansRun run;
  run.assign.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest(centers, z.col(i), &d2[i]);
      if (c != run.assign[i]) {
        run.assign[i] = c;
        changed = true;
      }
    }
    // empty clusters take the point farthest from its center
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : run.assign) ++counts[a];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[run.assign[i]] > 1 && (far < 0 || d2[i] > d2[far])) far = i;
      }
      --counts[run.assign[far]];
      run.assign[far] = static_cast<int>(c);
      ++counts[c];
      d2[far] = 0.0;
      changed = true;
    }
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centers.col(run.assign[i]) += z.col(i);
    for (Eigen::Index c = 0; c < k; ++c) centers.col(c) /= counts[c];
    double w = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) w += (z.col(i) - centers.col(run.assign[i])).squaredNorm();
    run.history.push_back(w);
    run.within = w;
    run.iterations = it + 1;
    if (!changed) break;
  }
  run.centers = std::move(centers);
  return run;
}

// Distance-weighted (k-means++) seeding.
inline Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& z, int k, std::mt19937_64& rng) {
  const Eigen::Index n = z.cols();
  Eigen::MatrixXd centers(z.rows(), k);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.col(0) = z.col(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, (z.col(i) - centers.col(j)).squaredNorm());
      d2[i] = best;
      total += best;
    }
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        target -= d2[chosen];
        if (target <= 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centers.col(c) = z.col(chosen);
  }
  return centers;
}

// Best of `restarts` seeded runs plus optional extra initial centers; ties go
// to the lowest restart index (the extra start counts last).
inline KMeansRun best_kmeans(const Eigen::MatrixXd& z, int k, std::uint64_t seed, int restarts, int threads,
                             const Eigen::MatrixXd* extra_init = nullptr) {
  const int total = restarts + (extra_init ? 1 : 0);
  std::vector<KMeansRun> runs(static_cast<std::size_t>(total));
  parallel_for(runs.size(), threads, [&](std::size_t r) {
    if (static_cast<int>(r) < restarts) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      runs[r] = lloyd(z, seed_centers(z, k, rng));
    } else {
      runs[r] = lloyd(z, *extra_init);
    }
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].within < runs[best].within) best = r;
  }
  return std::move(runs[best]);
}

// Relabels clusters 1..k in order of first appearance.
inline std::vector<int> canonical_labels(std::span<const int> assign, int k, std::vector<int>* order = nullptr) {
  std::vector<int> map(static_cast<std::size_t>(k), 0);
  int next = 0;
  std::vector<int> out(assign.size());
  std::vector<int> perm;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (map[assign[i]] == 0) {
      map[assign[i]] = ++next;
      perm.push_back(assign[i]);
    }
    out[i] = map[assign[i]];
  }
  if (order) *order = std::move(perm);
  return out;
}

inline void check_cluster_count(Eigen::Index n, int k) {
  if (k < 1) {
    throw Error(ErrorKind::InvalidConfig, "cluster", "k must be >= 1");
  }
  if (n < k) {
    throw Error(ErrorKind::TooFewCurves, "cluster",
                "need at least " + std::to_string(k) + " curves, got " + std::to_string(n));
  }
}

inline ClusterResult finish(const Eigen::MatrixXd& z, const Eigen::MatrixXd* coeffs, std::span<const int> assign,
                            int k) {
  ClusterResult res;
  res.partition.k = k;
  res.partition.labels = canonical_labels(assign, k);
  const Eigen::MatrixXd& space = coeffs ? *coeffs : z;
  res.centroids = Eigen::MatrixXd::Zero(space.rows(), k);
  Eigen::MatrixXd zc = Eigen::MatrixXd::Zero(z.rows(), k);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    const int c = res.partition.labels[i] - 1;
    res.centroids.col(c) += space.col(static_cast<Eigen::Index>(i));
    zc.col(c) += z.col(static_cast<Eigen::Index>(i));
    ++counts[c];
  }
  for (int c = 0; c < k; ++c) {
    res.centroids.col(c) /= counts[c];
    zc.col(c) /= counts[c];
  }
  for (std::size_t i = 0; i < assign.size(); ++i) {
    res.within += (z.col(static_cast<Eigen::Index>(i)) - zc.col(res.partition.labels[i] - 1)).squaredNorm();
  }
  return res;
}

}  // namespace detail

/// k-means on feature columns of z (Euclidean).
inline ClusterResult kmeans_features(const Eigen::MatrixXd& z, int k, std::uint64_t seed = 1, int restarts = 20,
                                     int threads = 1, const Eigen::MatrixXd* coeffs = nullptr) {
  detail::check_cluster_count(z.cols(), k);
  if (restarts < 1) throw Error(ErrorKind::InvalidConfig, "cluster", "restarts must be >= 1");
  auto run = detail::best_kmeans(z, k, seed, restarts, threads);
  ClusterResult res = detail::finish(z, coeffs, run.assign, k);
  res.iterations = run.iterations;
  res.history = std::move(run.history);
  res.seed = seed;
  return res;
}

inline ClusterResult functional_kmeans(const FitModel& model, int k, std::uint64_t seed = 1, int restarts = 20,
                                       int threads = 1) {
  return kmeans_features(gram_features(model), k, seed, restarts, threads, &model.coeffs);
}

enum class Linkage { Ward, Complete, Average };

inline Linkage parse_linkage(std::string_view s) {
  if (s == "ward") return Linkage::Ward;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  throw Error(ErrorKind::InvalidConfig, "cluster", "unknown linkage '" + std::string(s) + "'");
}

/// Agglomerative clustering cut at k clusters. Merges the closest pair
/// (lowest indices on ties), Lance-Williams updates; Ward works on squared
/// distances.
inline ClusterResult hierarchical_features(const Eigen::MatrixXd& z, int k, Linkage linkage,
                                           const Eigen::MatrixXd* coeffs = nullptr) {
  const Eigen::Index n = z.cols();
  detail::check_cluster_count(n, k);
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = (z.col(i) - z.col(j)).squaredNorm();
      d(i, j) = linkage == Linkage::Ward ? s : std::sqrt(s);
    }
  }
  std::vector<int> owner(static_cast<std::size_t>(n));
  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  for (Eigen::Index i = 0; i < n; ++i) owner[i] = static_cast<int>(i);

  for (Eigen::Index clusters = n; clusters > k; --clusters) {
    Eigen::Index bi = -1;
    Eigen::Index bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (alive[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = size[bi];
    const double nj = size[bj];
    for (Eigen::Index m = 0; m < n; ++m) {
      if (!alive[m] || m == bi || m == bj) continue;
      double v = 0.0;
      switch (linkage) {
        case Linkage::Complete: v = std::max(d(bi, m), d(bj, m)); break;
        case Linkage::Average: v = (ni * d(bi, m) + nj * d(bj, m)) / (ni + nj); break;
        case Linkage::Ward: {
          const double nm = size[m];
          v = ((ni + nm) * d(bi, m) + (nj + nm) * d(bj, m) - nm * d(bi, bj)) / (ni + nj + nm);
          break;
        }
      }
      d(bi, m) = d(m, bi) = v;
    }
    alive[bj] = false;
    size[bi] += size[bj];
    for (auto& o : owner) {
      if (o == bj) o = static_cast<int>(bi);
    }
  }
  std::vector<int> roots;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alive[i]) roots.push_back(static_cast<int>(i));
  }
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    assign[i] = static_cast<int>(std::find(roots.begin(), roots.end(), owner[i]) - roots.begin());
  }
  ClusterResult res = detail::finish(z, coeffs, assign, k);
  res.iterations = static_cast<int>(n - k);
  return res;
}

inline ClusterResult hierarchical_cluster(const FitModel& model, int k, Linkage linkage = Linkage::Ward) {
  return hierarchical_features(gram_features(model), k, linkage, &model.coeffs);
}

struct ElbowResult {
  std::vector<double> within;  // within[k-1] = W(k)
  int suggested_k = 1;
  double max_curvature = 0.0;
  bool low_confidence = false;
};

/// W(1..k_max) with W non-increasing (each k also starts from the k-1
/// solution plus its worst-fit point); suggested k maximizes
/// W(k-1) - 2 W(k) + W(k+1). Flagged low-confidence when that maximum is
/// below 5% of W(1).
inline ElbowResult elbow_features(const Eigen::MatrixXd& z, int k_max, std::uint64_t seed = 1, int restarts = 20,
                                  int threads = 1) {
  if (k_max < 2) throw Error(ErrorKind::InvalidConfig, "cluster", "k_max must be >= 2");
  detail::check_cluster_count(z.cols(), k_max);
  ElbowResult out;
  const Eigen::VectorXd mean = z.rowwise().mean();
  double w1 = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) w1 += (z.col(i) - mean).squaredNorm();
  out.within.push_back(w1);
  Eigen::MatrixXd prev = mean;
  std::vector<int> prev_assign(static_cast<std::size_t>(z.cols()), 0);
  for (int k = 2; k <= k_max; ++k) {
    Eigen::MatrixXd warm(z.rows(), k);
    warm.leftCols(k - 1) = prev;
    Eigen::Index far = 0;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < z.cols(); ++i) {
      const double dd = (z.col(i) - prev.col(prev_assign[i])).squaredNorm();
      if (dd > far_d) {
        far_d = dd;
        far = i;
      }
    }
    warm.col(k - 1) = z.col(far);
    auto run = detail::best_kmeans(z, k, seed + static_cast<std::uint64_t>(k), restarts, threads, &warm);
    out.within.push_back(run.within);
    prev = run.centers;
    prev_assign = run.assign;
  }
  out.suggested_k = 2;
  out.max_curvature = -std::numeric_limits<double>::infinity();
  for (int k = 2; k < k_max; ++k) {
    const double curv = out.within[k - 2] - 2.0 * out.within[k - 1] + out.within[k];
    if (curv > out.max_curvature) {
      out.max_curvature = curv;
      out.suggested_k = k;
    }
  }
  if (k_max == 2) out.max_curvature = 0.0;
  out.low_confidence = out.max_curvature < 0.05 * w1;
  return out;
}

inline ElbowResult elbow_curve(const FitModel& model, int k_max, std::uint64_t seed = 1, int restarts = 20,
                               int threads = 1) {
  return elbow_features(gram_features(model), k_max, seed, restarts, threads);
}

// ---- partition agreement ----

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

namespace detail {

inline std::int64_t pairs(std::int64_t m) { return m * (m - 1) / 2; }

struct Contingency {
  std::vector<std::vector<std::int64_t>> table;
  std::vector<std::int64_t> rows;
  std::vector<std::int64_t> cols;
  std::vector<int> row_labels;
  std::vector<int> col_labels;
};

inline Contingency contingency(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch, "cluster", "partitions have different lengths");
  }
  std::map<int, int> ia;
  std::map<int, int> ib;
  for (int x : a) ia.emplace(x, 0);
  for (int x : b) ib.emplace(x, 0);
  Contingency c;
  for (auto& [label, idx] : ia) {
    idx = static_cast<int>(c.row_labels.size());
    c.row_labels.push_back(label);
  }
  for (auto& [label, idx] : ib) {
    idx = static_cast<int>(c.col_labels.size());
    c.col_labels.push_back(label);
  }
  c.table.assign(ia.size(), std::vector<std::int64_t>(ib.size(), 0));
  c.rows.assign(ia.size(), 0);
  c.cols.assign(ib.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int r = ia[a[i]];
    const int s = ib[b[i]];
    ++c.table[r][s];
    ++c.rows[r];
    ++c.cols[s];
  }
  return c;
}

}  // namespace detail

/// Pair counts over all n(n-1)/2 unordered pairs; "positive" means the
/// predicted partition puts the pair together.
inline ConfusionCounts confusion_counts(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = detail::contingency(predicted, truth);
  std::int64_t together_both = 0;
  for (const auto& row : c.table) {
    for (auto v : row) together_both += detail::pairs(v);
  }
  std::int64_t together_pred = 0;
  std::int64_t together_truth = 0;
  for (auto v : c.rows) together_pred += detail::pairs(v);
  for (auto v : c.cols) together_truth += detail::pairs(v);
  ConfusionCounts out;
  out.tp = together_both;
  out.fp = together_pred - together_both;
  out.fn = together_truth - together_both;
  out.tn = detail::pairs(static_cast<std::int64_t>(predicted.size())) - out.tp - out.fp - out.fn;
  return out;
}

inline double rand_index(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = confusion_counts(predicted, truth);
  const auto total = c.tp + c.tn + c.fp + c.fn;
  if (total == 0) return 1.0;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

struct AriValue {
  double value = 0.0;
  bool degenerate = false;  // adjustment denominator vanished
};

/// Hubert-Arabie adjusted Rand index (RI - E[RI]) / (max RI - E[RI]) in the
/// sum-of-binomials form.
inline AriValue adjusted_rand_index_detail(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = detail::contingency(predicted, truth);
  // integer sums; the quotient is formed once so small cases are exact
  using wide = __int128;
  wide index = 0;
  for (const auto& row : c.table) {
    for (auto v : row) index += detail::pairs(v);
  }
  wide sa = 0;
  wide sb = 0;
  for (auto v : c.rows) sa += detail::pairs(v);
  for (auto v : c.cols) sb += detail::pairs(v);
  const wide total = detail::pairs(static_cast<std::int64_t>(predicted.size()));
  // (index - sa sb / total) / ((sa + sb) / 2 - sa sb / total)
  const wide num = 2 * (index * total - sa * sb);
  const wide den = (sa + sb) * total - 2 * sa * sb;
  if (den == 0) {
    // both partitions trivial: equal iff the contingency table is a permutation
    const bool same = c.rows.size() == c.cols.size() && index == sa && index == sb;
    return {same ? 1.0 : 0.0, true};
  }
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

inline double adjusted_rand_index(std::span<const int> predicted, std::span<const int> truth) {
  return adjusted_rand_index_detail(predicted, truth).value;
}

// ---- cluster-to-truth matching ----

namespace detail {

// Minimum-cost perfect assignment on a square matrix (Hungarian method,
// O(n^3)). Returns col index per row.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace detail

struct ClusterMatch {
  int label = 0;        // predicted cluster
  int truth_label = 0;  // matched reference group (0 when unmatched)
  std::int64_t size = 0;
  std::int64_t false_positives = 0;  // members not in the matched group
};

/// Maps predicted clusters to reference groups maximizing total overlap.
inline std::vector<ClusterMatch> match_clusters(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = detail::contingency(predicted, truth);
  const int m = static_cast<int>(std::max(c.rows.size(), c.cols.size()));
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    for (std::size_t j = 0; j < c.cols.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -static_cast<double>(c.table[i][j]);
    }
  }
  const auto assign = detail::hungarian(cost);
  std::vector<ClusterMatch> out;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    ClusterMatch cm;
    cm.label = c.row_labels[i];
    cm.size = c.rows[i];
    const int j = assign[i];
    if (j >= 0 && j < static_cast<int>(c.cols.size())) {
      cm.truth_label = c.col_labels[j];
      cm.false_positives = c.rows[i] - c.table[i][j];
    } else {
      cm.false_positives = c.rows[i];
    }
    out.push_back(cm);
  }
  return out;
}

}  // namespace fks
