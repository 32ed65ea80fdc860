#pragma once

// Roughness penalty matrices R_l(i, j) = integral of D^l phi_i * D^l phi_j
// over [lo, hi], computed exactly by per-span Gauss-Legendre quadrature.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fks/basis.hpp"
#include "fks/detail/quadrature.hpp"
#include "fks/error.hpp"

namespace fks {

struct PenaltyMatrix {
  int order = 0;
  Eigen::MatrixXd values;
  BasisSpec spec;
};

/// Weights of the roughness terms. When `alphas` is empty the first- and
/// second-derivative matrices get lambda1 and lambda2; otherwise alphas[l]
/// weights the order-l matrix.
struct PenaltyConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> alphas;

  double weight(int order) const {
    if (!alphas.empty()) {
      return order >= 0 && order < static_cast<int>(alphas.size()) ? alphas[order] : 0.0;
    }
    if (order == 1) return lambda1;
    if (order == 2) return lambda2;
    return 0.0;
  }

  void validate() const {
    if (!std::isfinite(lambda1) || !std::isfinite(lambda2) || lambda1 < 0.0 || lambda2 < 0.0) {
      throw Error(ErrorKind::InvalidConfig, "penalty", "lambda1 and lambda2 must be finite and >= 0");
    }
    for (double a : alphas) {
      if (!std::isfinite(a)) {
        throw Error(ErrorKind::InvalidConfig, "penalty", "penalty weights must be finite");
      }
    }
  }

  bool operator==(const PenaltyConfig&) const = default;
};

/// `points_per_span` = 0 picks order - l points, exact for the
/// degree 2(order-1-l) integrand.
inline PenaltyMatrix penalty_matrix(const BasisSpec& spec, int l, int points_per_span = 0) {
  detail::check_derivative(spec, l);
  const int p = spec.degree();
  const int nb = spec.n_basis();
  const int q = points_per_span > 0 ? points_per_span : spec.order - l;
  const auto rule = detail::gauss_legendre(q);
  const auto u = spec.full_knots();

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(nb, nb);
  for (int span = p; span < nb; ++span) {
    if (!(u[span] < u[span + 1])) {
      continue;
    }
    const auto [pts, wts] = detail::map_rule(rule, u[span], u[span + 1]);
    for (std::size_t g = 0; g < pts.size(); ++g) {
      const Eigen::MatrixXd ders = detail::basis_derivatives(u, span, p, pts[g], l);
      const Eigen::VectorXd row = ders.row(l).transpose();
      r.block(span - p, span - p, p + 1, p + 1).noalias() += wts[g] * row * row.transpose();
    }
  }
  // exact symmetry
  const Eigen::MatrixXd sym = 0.5 * (r + r.transpose());
  return PenaltyMatrix{l, sym, spec};
}

/// Square root of the exact-quadrature penalty: rows are sqrt(w_g) times the
/// l-th derivative row at each node, so D^T D = R_l.
inline Eigen::MatrixXd penalty_root(const BasisSpec& spec, int l) {
  detail::check_derivative(spec, l);
  const int p = spec.degree();
  const int nb = spec.n_basis();
  const auto rule = detail::gauss_legendre(spec.order - l);
  const auto u = spec.full_knots();
  std::vector<Eigen::VectorXd> rows;
  std::vector<int> first;
  for (int span = p; span < nb; ++span) {
    if (!(u[span] < u[span + 1])) {
      continue;
    }
    const auto [pts, wts] = detail::map_rule(rule, u[span], u[span + 1]);
    for (std::size_t g = 0; g < pts.size(); ++g) {
      const Eigen::MatrixXd ders = detail::basis_derivatives(u, span, p, pts[g], l);
      rows.push_back(std::sqrt(wts[g]) * ders.row(l).transpose());
      first.push_back(span - p);
    }
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), nb);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.block(static_cast<Eigen::Index>(i), first[i], 1, p + 1) = rows[i].transpose();
  }
  return d;
}

inline Eigen::MatrixXd combine(std::span<const PenaltyMatrix> matrices, const PenaltyConfig& config) {
  config.validate();
  if (matrices.empty()) {
    throw Error(ErrorKind::InvalidConfig, "penalty", "no penalty matrices to combine");
  }
  const BasisSpec& spec = matrices.front().spec;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(matrices.front().values.rows(), matrices.front().values.cols());
  for (const auto& m : matrices) {
    if (!(m.spec == spec) || m.values.rows() != out.rows() || m.values.cols() != out.cols()) {
      throw Error(ErrorKind::SpecMismatch, "penalty", "penalty matrices built from different bases");
    }
    const double w = config.weight(m.order);
    if (w != 0.0) {
      out += w * m.values;
    }
  }
  return out;
}

}  // namespace fks
