#pragma once

// B-spline bases on a clamped knot vector: validation, Cox-de Boor
// evaluation with derivatives, design matrices, and knot insertion.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fks/error.hpp"

namespace fks {

/// Spline space of order `order` (degree order-1) on [lo, hi] with simple
/// interior knots. The end knots are repeated `order` times.
struct BasisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int order = 4;
  std::vector<double> interior;

  int n_interior() const { return static_cast<int>(interior.size()); }
  int n_basis() const { return n_interior() + order; }
  int degree() const { return order - 1; }

  std::vector<double> full_knots() const {
    std::vector<double> u;
    u.reserve(interior.size() + 2 * order);
    u.insert(u.end(), order, lo);
    u.insert(u.end(), interior.begin(), interior.end());
    u.insert(u.end(), order, hi);
    return u;
  }

  bool operator==(const BasisSpec&) const = default;
};

inline BasisSpec make_basis_spec(double a, double b, int order, std::vector<double> interior) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw Error(ErrorKind::InvalidConfig, "basis", "domain must satisfy a < b");
  }
  if (order < 2) {
    throw Error(ErrorKind::OrderTooSmall, "basis", "order must be >= 2, got " + std::to_string(order));
  }
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const double s = interior[i];
    if (!std::isfinite(s) || s <= a || s >= b) {
      throw Error(ErrorKind::KnotOutOfDomain, "basis",
                  "interior knot " + std::to_string(i) + " = " + std::to_string(s) + " not in (a, b)");
    }
    if (i > 0 && !(interior[i - 1] < s)) {
      throw Error(ErrorKind::NonIncreasingKnots, "basis",
                  "interior knots must be strictly increasing at index " + std::to_string(i));
    }
  }
  return BasisSpec{a, b, order, std::move(interior)};
}

/// Rows are evaluation points, columns basis functions: values(j, k) is the
/// requested derivative of phi_k at points[j].
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<double> points;
  int derivative = 0;
};

namespace detail {

// Index i of the knot span with u[i] <= t < u[i+1]; t == hi maps to the last
// nonempty span.
inline int find_span(const std::vector<double>& u, int n_basis, int degree, double t) {
  if (t >= u[n_basis]) {
    return n_basis - 1;
  }
  const auto it = std::upper_bound(u.begin() + degree, u.begin() + n_basis + 1, t);
  return static_cast<int>(it - u.begin()) - 1;
}

// Nonzero basis values and derivatives 0..n_derivs at t on span i.
// Result(k, j) = D^k N_{i-degree+j}(t). (Piegl & Tiller, algorithm A2.3.)
inline Eigen::MatrixXd basis_derivatives(const std::vector<double>& u, int span, int degree, double t,
                                         int n_derivs) {
  const int p = degree;
  Eigen::MatrixXd ndu(p + 1, p + 1);
  std::vector<double> left(p + 1, 0.0);
  std::vector<double> right(p + 1, 0.0);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - u[span + 1 - j];
    right[j] = u[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(n_derivs + 1, p + 1);
  for (int j = 0; j <= p; ++j) {
    ders(0, j) = ndu(j, p);
  }
  if (n_derivs == 0) {
    return ders;
  }

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a.setZero();
    a(0, 0) = 1.0;
    for (int k = 1; k <= n_derivs; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = r - 1 <= pk ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n_derivs; ++k) {
    ders.row(k) *= factor;
    factor *= (p - k);
  }
  return ders;
}

inline void check_derivative(const BasisSpec& spec, int d) {
  if (d < 0) {
    throw Error(ErrorKind::InvalidConfig, "basis", "derivative order must be >= 0");
  }
  if (d >= spec.order) {
    throw Error(ErrorKind::DerivativeOrderTooHigh, "basis",
                "derivative order " + std::to_string(d) + " >= spline order " + std::to_string(spec.order));
  }
}

}  // namespace detail

inline DesignMatrix eval_design(const BasisSpec& spec, std::span<const double> t, int d = 0) {
  detail::check_derivative(spec, d);
  const auto u = spec.full_knots();
  const int nb = spec.n_basis();
  const int p = spec.degree();
  DesignMatrix out;
  out.derivative = d;
  out.points.assign(t.begin(), t.end());
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.size()), nb);
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double x = t[j];
    if (!(x >= spec.lo && x <= spec.hi)) {
      throw Error(ErrorKind::PointOutOfDomain, "basis",
                  "point " + std::to_string(x) + " outside [" + std::to_string(spec.lo) + ", " +
                      std::to_string(spec.hi) + "]");
    }
    const int span = detail::find_span(u, nb, p, x);
    const Eigen::MatrixXd ders = detail::basis_derivatives(u, span, p, x, d);
    for (int k = 0; k <= p; ++k) {
      out.values(static_cast<Eigen::Index>(j), span - p + k) = ders(d, k);
    }
  }
  return out;
}

inline std::vector<double> eval_spline(const BasisSpec& spec, std::span<const double> coeffs,
                                       std::span<const double> t, int d = 0) {
  if (static_cast<int>(coeffs.size()) != spec.n_basis()) {
    throw Error(ErrorKind::CoefficientLengthMismatch, "basis",
                "expected " + std::to_string(spec.n_basis()) + " coefficients, got " +
                    std::to_string(coeffs.size()));
  }
  const DesignMatrix design = eval_design(spec, t, d);
  const Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  const Eigen::VectorXd v = design.values * c;
  return {v.data(), v.data() + v.size()};
}

/// Boehm insertion of a new simple interior knot; the returned coefficients
/// represent the same function on the refined space.
inline std::pair<BasisSpec, std::vector<double>> insert_knot(const BasisSpec& spec,
                                                             std::span<const double> coeffs, double s) {
  if (static_cast<int>(coeffs.size()) != spec.n_basis()) {
    throw Error(ErrorKind::CoefficientLengthMismatch, "basis", "coefficient length mismatch");
  }
  std::vector<double> knots = spec.interior;
  knots.insert(std::upper_bound(knots.begin(), knots.end(), s), s);
  BasisSpec refined = make_basis_spec(spec.lo, spec.hi, spec.order, std::move(knots));

  const auto u = spec.full_knots();
  const int p = spec.degree();
  const int nb = spec.n_basis();
  const int k = detail::find_span(u, nb, p, s);
  std::vector<double> out(nb + 1);
  for (int i = 0; i <= nb; ++i) {
    if (i <= k - p) {
      out[i] = coeffs[i];
    } else if (i >= k + 1) {
      out[i] = coeffs[i - 1];
    } else {
      const double alpha = (s - u[i]) / (u[i + p] - u[i]);
      out[i] = alpha * coeffs[i] + (1.0 - alpha) * coeffs[i - 1];
    }
  }
  return {std::move(refined), std::move(out)};
}

}  // namespace fks
