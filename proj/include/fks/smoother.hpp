#pragma once

// Penalized least squares for fixed knots:
//   C = (B^T B + lambda1 R1 + lambda2 R2)^{-1} B^T Y
// with B the h x n_B design matrix, plus hat-matrix diagnostics.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fks/basis.hpp"
#include "fks/error.hpp"
#include "fks/penalty.hpp"

namespace fks {

/// n curves observed on a shared grid of h points; y is h x n.
struct FunctionalDataset {
  std::vector<double> t;
  Eigen::MatrixXd y;
  double lo = 0.0;
  double hi = 1.0;

  int n_points() const { return static_cast<int>(t.size()); }
  int n_curves() const { return static_cast<int>(y.cols()); }

  void validate() const {
    if (t.empty() || y.cols() == 0) {
      throw Error(ErrorKind::EmptyTable, "smoother", "dataset has no points or no curves");
    }
    if (static_cast<Eigen::Index>(t.size()) != y.rows()) {
      throw Error(ErrorKind::LengthMismatch, "smoother", "grid length does not match observation rows");
    }
    if (!(lo < hi)) {
      throw Error(ErrorKind::DomainError, "smoother", "dataset domain must satisfy lo < hi");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || t[i] < lo || t[i] > hi) {
        throw Error(ErrorKind::DomainError, "smoother", "grid point " + std::to_string(i) + " outside domain");
      }
      if (i > 0 && !(t[i - 1] <= t[i])) {
        throw Error(ErrorKind::DomainError, "smoother", "grid must be sorted");
      }
    }
    if (!y.allFinite()) {
      throw Error(ErrorKind::NonFiniteInput, "smoother", "observations contain non-finite values");
    }
  }
};

/// Smoothing variants: FS0 unpenalized, FS1 second-derivative penalty only,
/// FS2 first- and second-derivative penalties.
enum class Variant { FS0, FS1, FS2 };

inline constexpr double kDefaultLambda1 = 1e-7;
inline constexpr double kDefaultLambda2 = 1e-5;

inline PenaltyConfig variant_config(Variant v, double lambda1 = kDefaultLambda1,
                                    double lambda2 = kDefaultLambda2) {
  switch (v) {
    case Variant::FS0: return PenaltyConfig{0.0, 0.0, {}};
    case Variant::FS1: return PenaltyConfig{0.0, lambda2, {}};
    case Variant::FS2: return PenaltyConfig{lambda1, lambda2, {}};
  }
  return {};
}

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::FS0: return "fs0";
    case Variant::FS1: return "fs1";
    case Variant::FS2: return "fs2";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "fs0" || s == "FS0") return Variant::FS0;
  if (s == "fs1" || s == "FS1") return Variant::FS1;
  if (s == "fs2" || s == "FS2") return Variant::FS2;
  throw Error(ErrorKind::InvalidConfig, "smoother", "unknown variant '" + std::string(s) + "'");
}

/// H = B^T B + lambda1 R1 + lambda2 R2 with its Cholesky factor. The
/// interval [sigma_lo, sigma_hi] bounds the spectrum of H from the extreme
/// eigenvalues of the three summands.
struct SystemMatrix {
  Eigen::MatrixXd h;
  Eigen::LLT<Eigen::MatrixXd> chol;
  double sigma_lo = std::numeric_limits<double>::quiet_NaN();
  double sigma_hi = std::numeric_limits<double>::quiet_NaN();

  template <class Rhs>
  Eigen::MatrixXd solve(const Rhs& rhs) const {
    return chol.solve(rhs);
  }
};

namespace detail {

inline std::pair<double, double> extreme_eigenvalues(const Eigen::MatrixXd& m) {
  if (m.size() == 0) {
    return {0.0, 0.0};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

// Cholesky of an assembled H; rejects pivots that are negligible next to the
// data term (scale = max diagonal of B^T B).
inline Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& h, double data_scale) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "smoother", "Cholesky factorization failed");
  }
  const Eigen::MatrixXd& l = llt.matrixLLT();
  const double scale = std::max(data_scale, std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double pivot = l(i, i) * l(i, i);
    if (!(pivot > 1e-12 * scale)) {
      throw Error(ErrorKind::NotPositiveDefinite, "smoother",
                  "system matrix numerically singular at column " + std::to_string(i));
    }
  }
  return llt;
}

}  // namespace detail

/// r1/r2 may be empty (0x0) when the matching weight is zero.
inline SystemMatrix assemble_system(const DesignMatrix& design, const PenaltyConfig& config,
                                    const Eigen::MatrixXd& r1, const Eigen::MatrixXd& r2,
                                    bool with_bounds = true) {
  config.validate();
  const Eigen::Index nb = design.values.cols();
  SystemMatrix sys;
  const Eigen::MatrixXd gram = design.values.transpose() * design.values;
  sys.h = gram;
  auto add = [&](double w, const Eigen::MatrixXd& r, const char* name) {
    if (w == 0.0) {
      return;
    }
    if (r.rows() != nb || r.cols() != nb) {
      throw Error(ErrorKind::SpecMismatch, "smoother", std::string("penalty ") + name + " has wrong size");
    }
    sys.h += w * r;
  };
  add(config.lambda1, r1, "R1");
  add(config.lambda2, r2, "R2");
  sys.chol = detail::factor_spd(sys.h, gram.diagonal().maxCoeff());
  if (with_bounds) {
    const auto [g_lo, g_hi] = detail::extreme_eigenvalues(gram);
    double lo = g_lo;
    double hi = g_hi;
    if (config.lambda1 != 0.0) {
      const auto [a, b] = detail::extreme_eigenvalues(r1);
      lo += config.lambda1 * a;
      hi += config.lambda1 * b;
    }
    if (config.lambda2 != 0.0) {
      const auto [a, b] = detail::extreme_eigenvalues(r2);
      lo += config.lambda2 * a;
      hi += config.lambda2 * b;
    }
    sys.sigma_lo = lo;
    sys.sigma_hi = hi;
  }
  return sys;
}

struct Diagnostics {
  double df = 0.0;
  double gcv = std::numeric_limits<double>::quiet_NaN();
  double sse = 0.0;
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
};

struct FitModel {
  BasisSpec spec;
  Eigen::MatrixXd coeffs;  // n_B x n
  PenaltyConfig config;
  Diagnostics diagnostics;
  Eigen::MatrixXd residuals;  // h x n

  /// Fitted curves (columns) at arbitrary points, derivative d.
  Eigen::MatrixXd evaluate(std::span<const double> t, int d = 0) const {
    return eval_design(spec, t, d).values * coeffs;
  }
};

namespace detail {

struct PenalizedSolution {
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd residuals;
  double df = 0.0;
};

// Least squares on the stacked system [B; sqrt(w_l) D_l ...] with
// D_l^T D_l = R_l. Same solution as H c = B^T Y, but H is never formed, so
// heavy penalties keep their null space intact.
inline PenalizedSolution penalized_solve(const FunctionalDataset& data, const BasisSpec& spec,
                                         const PenaltyConfig& config, bool want_df) {
  config.validate();
  const DesignMatrix design = eval_design(spec, data.t, 0);
  const Eigen::MatrixXd& b = design.values;
  const Eigen::Index nb = b.cols();
  std::vector<Eigen::MatrixXd> blocks{b};
  for (int l = 0; l < spec.order; ++l) {
    const double w = config.weight(l);
    if (w < 0.0) throw Error(ErrorKind::InvalidConfig, "smoother", "penalty weights must be >= 0");
    if (w != 0.0) blocks.push_back(std::sqrt(w) * penalty_root(spec, l));
  }
  Eigen::Index rows = 0;
  for (const auto& m : blocks) rows += m.rows();
  if (rows < nb) {
    throw Error(ErrorKind::NotPositiveDefinite, "smoother", "fewer equations than basis functions");
  }
  Eigen::MatrixXd a(rows, nb);
  Eigen::Index at = 0;
  for (const auto& m : blocks) {
    a.middleRows(at, m.rows()) = m;
    at += m.rows();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(nb).triangularView<Eigen::Upper>();
  // R^T R = H, so R_ii^2 are the Cholesky pivots of H
  const double scale = std::max(b.colwise().squaredNorm().maxCoeff(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < nb; ++i) {
    if (!(r(i, i) * r(i, i) > 1e-12 * scale)) {
      throw Error(ErrorKind::NotPositiveDefinite, "smoother",
                  "system matrix numerically singular at column " + std::to_string(i));
    }
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(rows, data.y.cols());
  rhs.topRows(b.rows()) = data.y;
  rhs.applyOnTheLeft(qr.householderQ().adjoint());
  PenalizedSolution out;
  out.coeffs = r.triangularView<Eigen::Upper>().solve(rhs.topRows(nb));
  out.residuals = data.y - b * out.coeffs;
  if (want_df) {
    // trace(B H^{-1} B^T) = ||B R^{-1}||_F^2
    const Eigen::MatrixXd br = r.transpose().triangularView<Eigen::Lower>().solve(b.transpose());
    out.df = br.squaredNorm();
  }
  return out;
}

inline Diagnostics make_diagnostics(double df, double sse, int h, int n) {
  Diagnostics d;
  d.df = df;
  d.sse = sse;
  const double dof = h - df;
  if (dof > 1e-10 * h) {
    d.gcv = h * sse / (n * dof * dof);
    d.sigma2 = sse / (n * dof);
  }
  return d;
}

}  // namespace detail

inline FitModel fit_coefficients(const FunctionalDataset& data, const BasisSpec& spec,
                                 const PenaltyConfig& config) {
  data.validate();
  config.validate();
  if (spec.lo > data.lo || spec.hi < data.hi) {
    throw Error(ErrorKind::DomainError, "smoother", "basis domain does not cover the dataset domain");
  }
  auto sol = detail::penalized_solve(data, spec, config, true);
  FitModel model;
  model.spec = spec;
  model.config = config;
  model.coeffs = std::move(sol.coeffs);
  model.residuals = std::move(sol.residuals);
  model.diagnostics =
      detail::make_diagnostics(sol.df, model.residuals.squaredNorm(), data.n_points(), data.n_curves());
  return model;
}

/// df = trace of the hat matrix; gcv = h * sse / (n (h - df)^2), the
/// Craven-Wahba score of the n*h stacked observations sharing one hat matrix.
inline Diagnostics hat_diagnostics(const FitModel& model, const FunctionalDataset& data) {
  data.validate();
  if (model.coeffs.rows() != model.spec.n_basis() || model.coeffs.cols() != data.n_curves()) {
    throw Error(ErrorKind::LengthMismatch, "smoother", "model and dataset shapes disagree");
  }
  const double df = detail::penalized_solve(data, model.spec, model.config, true).df;
  const DesignMatrix design = eval_design(model.spec, data.t, 0);
  const double sse = (data.y - design.values * model.coeffs).squaredNorm();
  const int h = data.n_points();
  if (h - df <= 1e-10 * h) {
    throw Error(ErrorKind::DegenerateDenominator, "smoother",
                "effective degrees of freedom " + std::to_string(df) + " >= number of points");
  }
  return detail::make_diagnostics(df, sse, h, data.n_curves());
}

}  // namespace fks
