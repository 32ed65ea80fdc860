#include <gtest/gtest.h>

#include <random>

#include "fks/penalty.hpp"
#include "support.hpp"

using namespace fks;

namespace {

// Polynomials as coefficient vectors in powers of t.
using Poly = std::vector<double>;

Poly multiply(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

double integrate01(const Poly& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] / static_cast<double>(i + 1);
  return s;
}

}  // namespace

TEST(PenaltyMatrix, LinearSplinesOnUnitInterval) {
  const auto spec = make_basis_spec(0, 1, 2, {});
  const auto r0 = penalty_matrix(spec, 0).values;
  const auto r1 = penalty_matrix(spec, 1).values;
  Eigen::Matrix2d e0, e1;
  e0 << 1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3;
  e1 << 1, -1, -1, 1;
  EXPECT_LT((r0 - e0).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((r1 - e1).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PenaltyMatrix, CubicSecondDerivativeMatchesBernsteinIntegrals) {
  // second derivatives of the cubic Bernstein basis
  const std::vector<Poly> d2{{6, -6}, {-12, 18}, {6, -18}, {0, 6}};
  const auto r2 = penalty_matrix(make_basis_spec(0, 1, 4, {}), 2).values;
  EXPECT_NEAR(r2(0, 0), 12.0, 1e-12);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(r2(i, j), integrate01(multiply(d2[i], d2[j])), 1e-12);
  }
}

TEST(PenaltyMatrix, QuadratureRefinementChangesNothing) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = test::random_spec(rng);
    for (int l = 0; l < spec.order; ++l) {
      const auto exact = penalty_matrix(spec, l).values;
      const auto fine = penalty_matrix(spec, l, spec.order - l + 6).values;
      EXPECT_LT((exact - fine).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, exact.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(PenaltyMatrix, SymmetricBandedPositiveSemidefinite) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = test::random_spec(rng);
    for (int l = 0; l < spec.order; ++l) {
      const auto r = penalty_matrix(spec, l).values;
      EXPECT_EQ(r, r.transpose());
      for (Eigen::Index i = 0; i < r.rows(); ++i) {
        for (Eigen::Index j = 0; j < r.cols(); ++j) {
          if (std::abs(i - j) >= spec.order) EXPECT_EQ(r(i, j), 0.0);
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * std::max(1.0, r.norm()));
    }
  }
}

TEST(PenaltyMatrix, QuadraticFormEqualsIntegratedSquaredDerivative) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = test::random_spec(rng);
    std::normal_distribution<double> coef(0.0, 1.0);
    Eigen::VectorXd c(spec.n_basis());
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = coef(rng);
    const std::vector<double> cv(c.data(), c.data() + c.size());
    for (int l = 0; l < spec.order; ++l) {
      const double form = c.dot(penalty_matrix(spec, l).values * c);
      const double integral = test::span_simpson(spec, [&](double x) {
        const std::vector<double> at{x};
        const double v = eval_spline(spec, cv, at, l)[0];
        return v * v;
      });
      EXPECT_NEAR(form, integral, 1e-8 * std::max(1.0, std::abs(integral)));
    }
  }
}

TEST(PenaltyMatrix, AnnihilatesLowDegreePolynomials) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    const auto base = test::random_spec(rng, 4, 6);
    const auto spec = make_basis_spec(base.lo, base.hi, 4, base.interior);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(spec.n_basis());
    // x(t) = t has Greville-abscissa coefficients
    const auto u = spec.full_knots();
    Eigen::VectorXd lin(spec.n_basis());
    for (int i = 0; i < spec.n_basis(); ++i) lin(i) = (u[i + 1] + u[i + 2] + u[i + 3]) / 3.0;
    const auto r1 = penalty_matrix(spec, 1).values;
    const auto r2 = penalty_matrix(spec, 2).values;
    EXPECT_LT((r1 * one).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, r1.norm()));
    EXPECT_LT((r2 * one).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, r2.norm()));
    EXPECT_LT((r2 * lin).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, r2.norm()));
  }
}

TEST(PenaltyRoot, SquaresToPenalty) {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = test::random_spec(rng);
    for (int l = 0; l < spec.order; ++l) {
      const auto r = penalty_matrix(spec, l).values;
      const auto d = penalty_root(spec, l);
      EXPECT_LT((d.transpose() * d - r).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, r.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(PenaltyMatrix, DerivativeOrderTooHigh) {
  try {
    penalty_matrix(make_basis_spec(0, 1, 3, {}), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DerivativeOrderTooHigh);
  }
}

TEST(Combine, WeightedSums) {
  const auto spec = make_basis_spec(0, 1, 2, {});
  const std::vector<PenaltyMatrix> mats{penalty_matrix(spec, 1)};
  EXPECT_TRUE(combine(mats, PenaltyConfig{0, 0, {}}).isZero(0.0));
  Eigen::Matrix2d expect;
  expect << 2, -2, -2, 2;
  EXPECT_LT((combine(mats, PenaltyConfig{2, 3, {}}) - expect).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(combine(mats, PenaltyConfig{1, 0, {}}), mats[0].values);
}

TEST(Combine, GeneralWeightsAndMixedOrders) {
  const auto spec = make_basis_spec(0, 2, 4, {0.7, 1.1});
  const std::vector<PenaltyMatrix> mats{penalty_matrix(spec, 0), penalty_matrix(spec, 1), penalty_matrix(spec, 2)};
  PenaltyConfig cfg;
  cfg.alphas = {0.5, 2.0, 3.0};
  const Eigen::MatrixXd expect = 0.5 * mats[0].values + 2.0 * mats[1].values + 3.0 * mats[2].values;
  EXPECT_LT((combine(mats, cfg) - expect).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd lam = combine(mats, PenaltyConfig{1e-7, 1e-5, {}});
  EXPECT_LT((lam - (1e-7 * mats[1].values + 1e-5 * mats[2].values)).cwiseAbs().maxCoeff(), 1e-18);
}

TEST(Combine, Errors) {
  const std::vector<PenaltyMatrix> mixed{penalty_matrix(make_basis_spec(0, 1, 4, {}), 1),
                                         penalty_matrix(make_basis_spec(0, 1, 4, {0.5}), 2)};
  try {
    combine(mixed, PenaltyConfig{1, 1, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SpecMismatch);
  }
  const std::vector<PenaltyMatrix> one{penalty_matrix(make_basis_spec(0, 1, 4, {}), 1)};
  EXPECT_THROW(combine(one, PenaltyConfig{-1, 0, {}}), Error);
  EXPECT_THROW(combine({}, PenaltyConfig{}), Error);
}
