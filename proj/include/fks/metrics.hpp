#pragma once

// Fit-quality metrics: discrete SSE and integrated squared error (ISSE)
// between curve families, on the full domain or on tail regions.

#include <algorithm>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fks/detail/quadrature.hpp"
#include "fks/error.hpp"
#include "fks/smoother.hpp"

namespace fks {

/// Evaluates a family of curves at the given points; result is
/// points x curves.
using CurveFamily = std::function<Eigen::MatrixXd(std::span<const double>)>;

inline CurveFamily spline_family(const FitModel& model) {
  return [model](std::span<const double> t) { return model.evaluate(t, 0); };
}

/// Curve j of the family is fn(j, t).
inline CurveFamily function_family(std::function<double(int, double)> fn, int n_curves) {
  return [fn = std::move(fn), n_curves](std::span<const double> t) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(t.size()), n_curves);
    for (int j = 0; j < n_curves; ++j) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        out(static_cast<Eigen::Index>(i), j) = fn(j, t[i]);
      }
    }
    return out;
  };
}

struct TailRegions {
  double lo = 0.0;
  double hi = 1.0;
  double width_lo = 0.1;
  double width_hi = 0.1;

  std::pair<double, double> lower() const { return {lo, lo + width_lo}; }
  std::pair<double, double> upper() const { return {hi - width_hi, hi}; }

  void validate() const {
    if (!(lo < hi) || !(width_lo > 0.0) || !(width_hi > 0.0) || width_lo + width_hi > hi - lo) {
      throw Error(ErrorKind::InvalidConfig, "metrics", "tail regions must be nonempty, disjoint and inside the domain");
    }
  }
};

/// Tails covering the given fractions of [lo, hi] (default 10% each).
inline TailRegions make_tails(double lo, double hi, double frac_lo = 0.1, double frac_hi = 0.1) {
  TailRegions t{lo, hi, frac_lo * (hi - lo), frac_hi * (hi - lo)};
  t.validate();
  return t;
}

inline constexpr int kDefaultQuadPanels = 64;
inline constexpr int kPointsPerPanel = 8;

/// Integral over [lo, hi] of (truth - fitted)^2 summed over curves.
/// `quad_points` is the number of composite panels (each an 8-point
/// Gauss-Legendre rule); panels never straddle `breakpoints`, so spline
/// fits are integrated piece by piece.
inline double integrated_sse(const CurveFamily& truth, const CurveFamily& fitted, double lo, double hi,
                             int quad_points = kDefaultQuadPanels, std::span<const double> breakpoints = {}) {
  if (!(lo < hi)) {
    throw Error(ErrorKind::EmptyInterval, "metrics", "integration interval is empty");
  }
  if (quad_points < 16) {
    throw Error(ErrorKind::InvalidConfig, "metrics", "quad_points must be >= 16");
  }
  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto rule = detail::gauss_legendre(kPointsPerPanel);
  const double panel = (hi - lo) / quad_points;
  std::vector<double> pts;
  std::vector<double> wts;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c];
    const double b = cuts[c + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel - 1e-9)));
    for (int k = 0; k < panels; ++k) {
      const double pa = a + (b - a) * k / panels;
      const double pb = k + 1 == panels ? b : a + (b - a) * (k + 1) / panels;
      auto [p, w] = detail::map_rule(rule, pa, pb);
      pts.insert(pts.end(), p.begin(), p.end());
      wts.insert(wts.end(), w.begin(), w.end());
    }
  }
  const Eigen::MatrixXd diff = truth(pts) - fitted(pts);
  if (diff.rows() != static_cast<Eigen::Index>(pts.size())) {
    throw Error(ErrorKind::LengthMismatch, "metrics", "curve family returned wrong number of rows");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < diff.rows(); ++i) {
    total += wts[static_cast<std::size_t>(i)] * diff.row(i).squaredNorm();
  }
  return total;
}

struct LocalIsse {
  double isse_inf = 0.0;
  double isse_sup = 0.0;
};

inline LocalIsse local_isse(const CurveFamily& truth, const CurveFamily& fitted, const TailRegions& tails,
                            int quad_points = kDefaultQuadPanels, std::span<const double> breakpoints = {}) {
  tails.validate();
  const auto [a0, a1] = tails.lower();
  const auto [b0, b1] = tails.upper();
  return {integrated_sse(truth, fitted, a0, a1, quad_points, breakpoints),
          integrated_sse(truth, fitted, b0, b1, quad_points, breakpoints)};
}

/// Discrete counterparts on observed data: SSE over all points and over the
/// points falling inside each tail.
struct DiscreteSse {
  double sse = 0.0;
  double sse_inf = 0.0;
  double sse_sup = 0.0;
};

inline DiscreteSse discrete_sse(std::span<const double> t, const Eigen::MatrixXd& observed,
                                const Eigen::MatrixXd& fitted, const TailRegions& tails) {
  if (observed.rows() != fitted.rows() || observed.cols() != fitted.cols() ||
      observed.rows() != static_cast<Eigen::Index>(t.size())) {
    throw Error(ErrorKind::LengthMismatch, "metrics", "observed and fitted shapes disagree");
  }
  tails.validate();
  DiscreteSse out;
  const auto [a0, a1] = tails.lower();
  const auto [b0, b1] = tails.upper();
  for (Eigen::Index i = 0; i < observed.rows(); ++i) {
    const double s = (observed.row(i) - fitted.row(i)).squaredNorm();
    const double x = t[static_cast<std::size_t>(i)];
    out.sse += s;
    if (x >= a0 && x <= a1) out.sse_inf += s;
    if (x >= b0 && x <= b1) out.sse_sup += s;
  }
  return out;
}

}  // namespace fks
