#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "fks/cluster.hpp"
#include "fks/metrics.hpp"
#include "support.hpp"

using namespace fks;

namespace {

// Restricted growth strings: every partition of n elements into <= max_blocks blocks.
void enumerate(int n, int max_blocks, std::vector<int>& cur, int used, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int b = 1; b <= std::min(used + 1, max_blocks); ++b) {
    cur.push_back(b);
    enumerate(n, max_blocks, cur, std::max(used, b), out);
    cur.pop_back();
  }
}

struct PairCounts {
  long tp = 0, tn = 0, fp = 0, fn = 0;
};

PairCounts count_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  PairCounts c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++c.tp;
      else if (sa) ++c.fp;
      else if (sb) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

// ARI as a single exact integer quotient.
double oracle_ari(const std::vector<int>& a, const std::vector<int>& b) {
  const long n = static_cast<long>(a.size());
  long table[8][8] = {};
  long rows[8] = {}, cols[8] = {};
  for (long i = 0; i < n; ++i) ++table[a[i]][b[i]], ++rows[a[i]], ++cols[b[i]];
  auto c2 = [](long m) { return m * (m - 1) / 2; };
  long index = 0, sa = 0, sb = 0;
  for (int i = 0; i < 8; ++i) {
    sa += c2(rows[i]);
    sb += c2(cols[i]);
    for (int j = 0; j < 8; ++j) index += c2(table[i][j]);
  }
  const long total = c2(n);
  const long num = 2 * (index * total - sa * sb);
  const long den = (sa + sb) * total - 2 * sa * sb;
  if (den == 0) return a == b ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

Eigen::MatrixXd blobs(const Eigen::MatrixXd& centers, int per, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::MatrixXd out(centers.rows(), centers.cols() * per);
  for (Eigen::Index c = 0; c < centers.cols(); ++c) {
    for (int i = 0; i < per; ++i) {
      for (Eigen::Index r = 0; r < centers.rows(); ++r) out(r, c * per + i) = centers(r, c) + z(rng);
    }
  }
  return out;
}

FitModel constant_groups() {
  const auto d = test::sample(test::linspace(0, 1, 20), 10, 0, 1, [](int j, double) { return j < 5 ? 0.0 : 10.0; });
  return fit_coefficients(d, make_basis_spec(0, 1, 4, {0.5}), PenaltyConfig{});
}

}  // namespace

TEST(KMeans, SeparatesConstantGroups) {
  const auto m = constant_groups();
  const auto r = functional_kmeans(m, 2);
  const std::vector<int> truth{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  EXPECT_EQ(adjusted_rand_index(r.partition.labels, truth), 1.0);
  EXPECT_NEAR(r.within, 0.0, 1e-18);
  EXPECT_EQ(r.centroids.rows(), m.spec.n_basis());
  EXPECT_NEAR(r.centroids(0, 1), 10.0, 1e-10);
}

TEST(KMeans, SingleClusterHoldsTotalDispersion) {
  std::mt19937_64 rng(113);
  Eigen::MatrixXd c(2, 1);
  c << 0, 0;
  const auto z = blobs(c, 30, 1.0, rng);
  const auto r = kmeans_features(z, 1);
  for (int l : r.partition.labels) EXPECT_EQ(l, 1);
  const Eigen::VectorXd mean = z.rowwise().mean();
  EXPECT_NEAR(r.within, (z.colwise() - mean).squaredNorm(), 1e-10);
}

TEST(KMeans, LloydHistoryNonIncreasing) {
  std::mt19937_64 rng(127);
  Eigen::MatrixXd c = Eigen::MatrixXd::Random(3, 5) * 3;
  const auto z = blobs(c, 20, 1.5, rng);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = kmeans_features(z, 5, seed, 1);
    ASSERT_FALSE(r.history.empty());
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] * (1 + 1e-12));
  }
}

TEST(KMeans, DeterministicAcrossThreads) {
  std::mt19937_64 rng(131);
  const auto z = blobs(Eigen::MatrixXd::Random(2, 4) * 5, 15, 1.0, rng);
  const auto a = kmeans_features(z, 4, 9, 20, 1);
  const auto b = kmeans_features(z, 4, 9, 20, 4);
  EXPECT_EQ(a.partition.labels, b.partition.labels);
  EXPECT_EQ(a.within, b.within);
}

TEST(KMeans, TooFewCurves) {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 3);
  EXPECT_EQ(test::thrown([&] { kmeans_features(z, 4); }), ErrorKind::TooFewCurves);
  EXPECT_EQ(test::thrown([&] { hierarchical_features(z, 4, Linkage::Ward); }), ErrorKind::TooFewCurves);
}

TEST(Hierarchical, SingletonsWhenKEqualsN) {
  std::mt19937_64 rng(137);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Random(2, 6);
  const auto r = hierarchical_features(z, 6, Linkage::Average);
  auto labels = r.partition.labels;
  std::sort(labels.begin(), labels.end());
  EXPECT_EQ(labels, (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_NEAR(r.within, 0.0, 1e-18);
}

TEST(Hierarchical, CompleteLinkageToy) {
  Eigen::MatrixXd z(1, 4);
  z << 0, 1, 10, 11;
  const auto r = hierarchical_features(z, 2, Linkage::Complete);
  EXPECT_EQ(r.partition.labels, (std::vector<int>{1, 1, 2, 2}));
}

TEST(Hierarchical, AnyLinkageSeparatesFarGroups) {
  const auto m = constant_groups();
  const std::vector<int> truth{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  for (auto l : {Linkage::Ward, Linkage::Complete, Linkage::Average}) {
    EXPECT_EQ(adjusted_rand_index(hierarchical_cluster(m, 2, l).partition.labels, truth), 1.0);
  }
  EXPECT_EQ(parse_linkage("complete"), Linkage::Complete);
  EXPECT_EQ(test::thrown([] { parse_linkage("single"); }), ErrorKind::InvalidConfig);
}

TEST(Elbow, FourEquidistantGroups) {
  std::mt19937_64 rng(139);
  Eigen::MatrixXd c(3, 4);
  c << 1, 1, -1, -1, 1, -1, 1, -1, 1, -1, -1, 1;
  const auto z = blobs(5 * c, 25, 0.2, rng);
  const auto e = elbow_features(z, 8);
  EXPECT_EQ(e.suggested_k, 4);
  EXPECT_FALSE(e.low_confidence);
}

TEST(Elbow, SingleBlobIsLowConfidence) {
  std::mt19937_64 rng(149);
  // 12 features, as for a 12-function basis
  const auto z = blobs(Eigen::MatrixXd::Zero(12, 1), 200, 1.0, rng);
  const auto e = elbow_features(z, 8);
  EXPECT_TRUE(e.low_confidence);
  ASSERT_EQ(e.within.size(), 8u);
  for (std::size_t k = 1; k < e.within.size(); ++k) EXPECT_LT(e.within[k], e.within[k - 1]);
}

TEST(Elbow, Validation) {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Random(2, 10);
  EXPECT_EQ(test::thrown([&] { elbow_features(z, 1); }), ErrorKind::InvalidConfig);
  const auto e = elbow_features(z, 2);
  EXPECT_EQ(e.suggested_k, 2);
  EXPECT_TRUE(e.low_confidence);
}

TEST(PairCounting, Examples) {
  const std::vector<int> a{1, 1, 2, 2}, b{1, 2, 1, 2};
  const auto c = confusion_counts(a, b);
  EXPECT_EQ(c.tp, 0);
  EXPECT_EQ(c.tn, 2);
  EXPECT_EQ(c.fp, 2);
  EXPECT_EQ(c.fn, 2);
  EXPECT_DOUBLE_EQ(rand_index(a, b), 2.0 / 6);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), -0.5);
  const auto same = confusion_counts(a, a);
  EXPECT_EQ(same.fp + same.fn, 0);
  EXPECT_EQ(rand_index(a, a), 1.0);
  EXPECT_EQ(adjusted_rand_index(a, a), 1.0);

  const std::vector<int> one{1, 1, 1}, singles{1, 2, 3};
  const auto s = confusion_counts(one, singles);
  EXPECT_EQ(s.tp, 0);
  EXPECT_EQ(s.fp, 3);
  EXPECT_EQ(s.fn, 0);
  EXPECT_EQ(s.tn, 0);

  const std::vector<int> p{1, 1}, q{1, 2};
  EXPECT_EQ(rand_index(p, q), 0.0);
  EXPECT_EQ(test::thrown([&] { rand_index(a, p); }), ErrorKind::LengthMismatch);
}

TEST(PairCounting, EnumerationOracle) {
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::vector<int>> parts;
    std::vector<int> cur;
    enumerate(n, 3, cur, 0, parts);
    for (const auto& a : parts) {
      for (const auto& b : parts) {
        const auto pc = count_pairs(a, b);
        const auto c = confusion_counts(a, b);
        ASSERT_EQ(c.tp, pc.tp);
        ASSERT_EQ(c.tn, pc.tn);
        ASSERT_EQ(c.fp, pc.fp);
        ASSERT_EQ(c.fn, pc.fn);
        const long total = pc.tp + pc.tn + pc.fp + pc.fn;
        const double ri = total ? static_cast<double>(pc.tp + pc.tn) / total : 1.0;
        ASSERT_EQ(rand_index(a, b), ri);
        ASSERT_DOUBLE_EQ(adjusted_rand_index(a, b), oracle_ari(a, b)) << "n=" << n;
      }
    }
  }
}

TEST(PairCounting, RandomLabelsHaveZeroExpectedAri) {
  std::mt19937_64 rng(151);
  std::uniform_int_distribution<int> lab(1, 4);
  std::vector<int> truth(200);
  for (int i = 0; i < 200; ++i) truth[i] = 1 + i / 50;
  double sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> r(200);
    for (int& x : r) x = lab(rng);
    sum += adjusted_rand_index(r, truth);
  }
  EXPECT_LT(std::abs(sum / 100), 0.05);
}

TEST(PairCounting, RelabelingInvariance) {
  std::mt19937_64 rng(157);
  std::uniform_int_distribution<int> lab(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> a(30), b(30);
    for (int& x : a) x = lab(rng);
    for (int& x : b) x = lab(rng);
    std::vector<int> perm{7, 3, 11, 5};
    std::vector<int> a2(30);
    for (int i = 0; i < 30; ++i) a2[i] = perm[a[i] - 1];
    EXPECT_EQ(rand_index(a, b), rand_index(a2, b));
    EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), adjusted_rand_index(a2, b));
    EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), adjusted_rand_index(b, a2));
    EXPECT_DOUBLE_EQ(adjusted_rand_index(a2, a), 1.0);
  }
}

TEST(PairCounting, DegenerateAdjustment) {
  const std::vector<int> one{1, 1, 1}, singles{1, 2, 3};
  const auto same = adjusted_rand_index_detail(one, one);
  EXPECT_TRUE(same.degenerate);
  EXPECT_EQ(same.value, 1.0);
  EXPECT_TRUE(adjusted_rand_index_detail(singles, singles).degenerate);
  EXPECT_FALSE(adjusted_rand_index_detail(one, singles).degenerate);
}

TEST(Matching, FalsePositivesUnderBestAssignment) {
  const std::vector<int> pred{1, 1, 1, 2, 2, 2, 3, 3};
  const std::vector<int> truth{2, 2, 1, 1, 1, 1, 3, 2};
  const auto m = match_clusters(pred, truth);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].truth_label, 2);
  EXPECT_EQ(m[0].false_positives, 1);
  EXPECT_EQ(m[1].truth_label, 1);
  EXPECT_EQ(m[1].false_positives, 0);
  EXPECT_EQ(m[2].truth_label, 3);
  EXPECT_EQ(m[2].false_positives, 1);
}

TEST(Matching, HungarianMatchesBruteForce) {
  std::mt19937_64 rng(163);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd cost(5, 5);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
    const auto a = detail::hungarian(cost);
    double got = 0.0;
    for (int i = 0; i < 5; ++i) got += cost(i, a[i]);
    std::vector<int> p{0, 1, 2, 3, 4};
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int i = 0; i < 5; ++i) s += cost(i, p[i]);
      best = std::min(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_NEAR(got, best, 1e-12);
  }
}

TEST(GramFeatures, DistanceMatchesQuadrature) {
  std::mt19937_64 rng(167);
  std::normal_distribution<double> z(0.0, 0.3);
  const auto d = test::sample(test::linspace(0, 5, 40), 6, 0, 5,
                              [&](int j, double x) { return std::sin(x + j) + z(rng); });
  const auto m = fit_coefficients(d, make_basis_spec(0, 5, 4, {0.7, 1.9, 2.4, 3.6}), PenaltyConfig{0, 1e-3, {}});
  const auto f = gram_features(m);
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      const CurveFamily ci = [&](std::span<const double> t) { return Eigen::MatrixXd(m.evaluate(t).col(i)); };
      const CurveFamily cj = [&](std::span<const double> t) { return Eigen::MatrixXd(m.evaluate(t).col(j)); };
      const double q = integrated_sse(ci, cj, 0, 5, kDefaultQuadPanels, m.spec.interior);
      EXPECT_NEAR((f.col(i) - f.col(j)).squaredNorm(), q, 1e-8 * std::max(1.0, q));
    }
  }
}
