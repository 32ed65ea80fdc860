#pragma once

// Free-knot estimation. Knots are optimized in Jupp coordinates
//   k_i = log((tau_{i+1} - tau_i) / (tau_i - tau_{i-1})),  tau_0 = a, tau_{p+1} = b,
// which map increasing knot vectors in (a, b) onto R^p. The linear
// coefficients are projected out, leaving the residual objective
//   f(k) = || Y - B(k) H(k)^{-1} B(k)^T Y ||_F^2,
// minimized by gradual knot addition with Gauss-Newton refinement.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fks/basis.hpp"
#include "fks/detail/parallel.hpp"
#include "fks/error.hpp"
#include "fks/penalty.hpp"
#include "fks/smoother.hpp"

namespace fks {

struct JuppCoords {
  Eigen::VectorXd k;
  double lo = 0.0;
  double hi = 1.0;

  int size() const { return static_cast<int>(k.size()); }
};

inline JuppCoords jupp(std::span<const double> tau, double a, double b) {
  if (!(a < b)) {
    throw Error(ErrorKind::InvalidConfig, "freeknot", "domain must satisfy a < b");
  }
  const auto p = static_cast<Eigen::Index>(tau.size());
  for (Eigen::Index i = 0; i < p; ++i) {
    const double prev = i == 0 ? a : tau[i - 1];
    if (!std::isfinite(tau[i]) || tau[i] <= a || tau[i] >= b) {
      throw Error(ErrorKind::KnotOutOfDomain, "freeknot", "knot outside (a, b)");
    }
    if (!(prev < tau[i])) {
      throw Error(ErrorKind::NonIncreasingKnots, "freeknot", "knots must be strictly increasing");
    }
  }
  JuppCoords out{Eigen::VectorXd(p), a, b};
  for (Eigen::Index i = 0; i < p; ++i) {
    const double prev = i == 0 ? a : tau[i - 1];
    const double next = i + 1 == p ? b : tau[i + 1];
    out.k(i) = std::log((next - tau[i]) / (tau[i] - prev));
  }
  return out;
}

/// Gaps g_i = tau_{i+1} - tau_i satisfy g_i = g_{i-1} exp(k_i) and sum to
/// b - a; computed in log space.
inline std::vector<double> jupp_inverse(const JuppCoords& coords) {
  const Eigen::Index p = coords.k.size();
  if (!coords.k.allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "freeknot", "Jupp coordinates must be finite");
  }
  std::vector<double> log_gap(static_cast<std::size_t>(p + 1), 0.0);
  for (Eigen::Index i = 0; i < p; ++i) {
    log_gap[i + 1] = log_gap[i] + coords.k(i);
  }
  const double top = *std::max_element(log_gap.begin(), log_gap.end());
  double total = 0.0;
  for (double& g : log_gap) {
    g = std::exp(g - top);
    total += g;
  }
  const double width = coords.hi - coords.lo;
  std::vector<double> tau(static_cast<std::size_t>(p));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    acc += log_gap[i];
    tau[i] = coords.lo + width * (acc / total);
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    const double prev = i == 0 ? coords.lo : tau[i - 1];
    if (!(tau[i] > prev) || !(tau[i] < coords.hi)) {
      throw Error(ErrorKind::DegenerateKnots, "freeknot", "Jupp coordinates collapse a knot gap");
    }
  }
  return tau;
}

/// Variable-projection objective for a fixed dataset, penalty and order.
class KnotObjective {
 public:
  /// Knot vectors with a gap (including to a or b) below `min_gap` are
  /// treated as infeasible by try_residuals.
  KnotObjective(const FunctionalDataset& data, PenaltyConfig config, int order, double min_gap = 0.0)
      : data_(&data), config_(std::move(config)), order_(order), min_gap_(min_gap) {
    config_.validate();
    scale_ = std::max(data.y.squaredNorm(), std::numeric_limits<double>::min());
  }

  int order() const { return order_; }
  const FunctionalDataset& data() const { return *data_; }
  const PenaltyConfig& config() const { return config_; }
  double data_scale() const { return scale_; }
  double min_gap() const { return min_gap_; }

  bool separated(std::span<const double> knots) const {
    double prev = data_->lo;
    for (double t : knots) {
      if (t - prev < min_gap_) return false;
      prev = t;
    }
    return data_->hi - prev >= min_gap_;
  }

  BasisSpec spec_for(std::span<const double> knots) const {
    return make_basis_spec(data_->lo, data_->hi, order_, {knots.begin(), knots.end()});
  }

  Eigen::MatrixXd residuals(std::span<const double> knots) const {
    return detail::penalized_solve(*data_, spec_for(knots), config_, false).residuals;
  }

  double value(std::span<const double> knots) const { return residuals(knots).squaredNorm(); }

  double at(const JuppCoords& k) const { return value(jupp_inverse(k)); }

  // Residuals at Jupp coordinates, or nullopt when the knots are degenerate
  // or the system is singular.
  std::optional<Eigen::MatrixXd> try_residuals(const Eigen::VectorXd& k) const {
    try {
      const auto knots = jupp_inverse(JuppCoords{k, data_->lo, data_->hi});
      if (!separated(knots)) return std::nullopt;
      return residuals(knots);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

 private:
  const FunctionalDataset* data_;
  PenaltyConfig config_;
  int order_;
  double min_gap_;
  double scale_;
};

inline double objective_f(const JuppCoords& k, const FunctionalDataset& data, const PenaltyConfig& config,
                          int order) {
  return KnotObjective(data, config, order).at(k);
}

struct GaussNewtonSettings {
  int max_iterations = 50;
  double step_tol = 1e-9;         // relative to 1 + |k|
  double objective_tol = 1e-10;   // relative decrease of f
  double gradient_tol = 1e-12;    // |J^T r|_inf relative to |Y|^2
  double initial_damping = 0.0;   // 0 starts with a pure Gauss-Newton step
  double fd_step = 1e-6;          // forward difference step, times 1 + |k_i|
  int max_damping_increases = 30;
};

struct RefineResult {
  JuppCoords k;
  double start_objective = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Levenberg-damped Gauss-Newton on the stacked residual vector with a
/// forward-difference Jacobian. Never returns a point worse than k0; when no
/// damped step can be accepted the best iterate is returned with
/// line_search_failed set.
inline RefineResult gauss_newton_refine(const JuppCoords& k0, const KnotObjective& objective,
                                        const GaussNewtonSettings& settings = {}) {
  RefineResult out;
  out.k = k0;
  auto r0 = objective.try_residuals(k0.k);
  if (!r0 && !objective.separated(jupp_inverse(k0))) {
    throw Error(ErrorKind::DegenerateKnots, "freeknot", "starting knots are closer than the minimum gap");
  }
  if (!r0) {
    throw Error(ErrorKind::NotPositiveDefinite, "freeknot", "objective not finite at the starting point");
  }
  const Eigen::Index p = k0.k.size();
  const Eigen::Index m = r0->size();
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(r0->data(), m);
  double f = r.squaredNorm();
  out.start_objective = f;
  out.objective = f;
  const double scale = objective.data_scale();
  if (p == 0 || f <= 1e-28 * scale) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd k = k0.k;
  double damping = settings.initial_damping;
  Eigen::MatrixXd jac(m, p);
  for (int it = 0; it < settings.max_iterations; ++it) {
    for (Eigen::Index i = 0; i < p; ++i) {
      const double step = settings.fd_step * (1.0 + std::abs(k(i)));
      Eigen::VectorXd kk = k;
      kk(i) += step;
      auto ri = objective.try_residuals(kk);
      double denom = step;
      if (!ri) {
        kk(i) = k(i) - step;
        ri = objective.try_residuals(kk);
        denom = -step;
      }
      if (ri) {
        jac.col(i) = (Eigen::Map<const Eigen::VectorXd>(ri->data(), m) - r) / denom;
      } else {
        jac.col(i).setZero();
      }
    }
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= settings.gradient_tol * scale) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const double diag_scale = std::max(normal.diagonal().maxCoeff(), std::numeric_limits<double>::min());

    bool accepted = false;
    bool step_negligible = false;
    for (int attempt = 0; attempt <= settings.max_damping_increases; ++attempt) {
      Eigen::MatrixXd lhs = normal;
      lhs.diagonal().array() += damping;
      const Eigen::VectorXd delta = lhs.ldlt().solve(-grad);
      if (!delta.allFinite()) {
        damping = damping == 0.0 ? 1e-4 * diag_scale : damping * 10.0;
        continue;
      }
      if (delta.norm() <= settings.step_tol * (1.0 + k.norm())) {
        step_negligible = true;
        break;
      }
      const Eigen::VectorXd trial = k + delta;
      auto rt = objective.try_residuals(trial);
      const double ft = rt ? rt->squaredNorm() : std::numeric_limits<double>::infinity();
      if (ft < f) {
        const double decrease = f - ft;
        k = trial;
        r = Eigen::Map<const Eigen::VectorXd>(rt->data(), m);
        const double f_old = f;
        f = ft;
        damping = damping / 10.0;
        if (damping < 1e-15 * diag_scale) damping = 0.0;
        accepted = true;
        if (delta.norm() <= settings.step_tol * (1.0 + k.norm()) || decrease <= settings.objective_tol * f_old ||
            f <= 1e-28 * scale) {
          out.converged = true;
        }
        break;
      }
      damping = damping == 0.0 ? 1e-4 * diag_scale : damping * 10.0;
    }
    out.iterations = it + 1;
    if (step_negligible) {
      out.converged = true;
      break;
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }
    if (out.converged) {
      break;
    }
  }
  out.k.k = k;
  out.objective = f;
  return out;
}

inline RefineResult gauss_newton_refine(const JuppCoords& k0, const FunctionalDataset& data,
                                        const PenaltyConfig& config, int order,
                                        const GaussNewtonSettings& settings = {}) {
  return gauss_newton_refine(k0, KnotObjective(data, config, order), settings);
}

struct KnotSearchConfig {
  int order = 4;
  int grid_size = 50;      // candidates per addition round
  int max_knots = 8;       // p_max
  bool fixed_p = false;    // true: always return p = max_knots
  double gcv_rel_tol = 1e-3;
  int patience = 2;        // stages without relative GCV improvement before stopping
  double min_gap_scale = 0.25;  // refined knots stay min_gap_scale * (b - a) / h apart
  GaussNewtonSettings gauss_newton;
  int threads = 1;

  double min_gap(const FunctionalDataset& data) const {
    return min_gap_scale * (data.hi - data.lo) / data.n_points();
  }

  void validate() const {
    if (order < 2) throw Error(ErrorKind::OrderTooSmall, "freeknot", "order must be >= 2");
    if (grid_size < 2) throw Error(ErrorKind::InvalidConfig, "freeknot", "grid_size must be >= 2");
    if (max_knots < 1) throw Error(ErrorKind::InvalidConfig, "freeknot", "max_knots must be >= 1");
    if (!(min_gap_scale >= 0.0) || !std::isfinite(min_gap_scale)) {
      throw Error(ErrorKind::InvalidConfig, "freeknot", "min_gap_scale must be finite and >= 0");
    }
    if (!(gcv_rel_tol > 0.0) || patience < 1) {
      throw Error(ErrorKind::InvalidConfig, "freeknot", "selection tolerances must be positive");
    }
    const auto& g = gauss_newton;
    if (g.max_iterations < 0 || !(g.step_tol > 0.0) || !(g.objective_tol > 0.0) || !(g.gradient_tol > 0.0) ||
        !(g.fd_step > 0.0) || g.initial_damping < 0.0) {
      throw Error(ErrorKind::InvalidConfig, "freeknot", "Gauss-Newton tolerances must be positive");
    }
  }
};

struct KnotStage {
  std::vector<double> knots;
  double start_objective = 0.0;  // best grid candidate
  double objective = 0.0;        // after refinement
  double gcv = std::numeric_limits<double>::infinity();
  double df = 0.0;
  int iterations = 0;
  bool converged = true;
  bool line_search_failed = false;
};

struct FreeKnotResult {
  int p = 0;
  std::vector<double> knots;
  JuppCoords k;
  FitModel model;
  std::vector<KnotStage> stages;  // stages[i] holds i interior knots

  std::vector<double> objective_trace() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < stages.size(); ++i) out.push_back(stages[i].objective);
    return out;
  }
};

namespace detail {

inline std::vector<double> candidate_grid(double a, double b, int n, std::span<const double> existing, int h) {
  const double exclusion = (b - a) / (4.0 * h);
  std::vector<double> out;
  for (int j = 1; j <= n; ++j) {
    const double s = a + (b - a) * j / (n + 1);
    const bool blocked = std::any_of(existing.begin(), existing.end(),
                                     [&](double t) { return std::abs(t - s) < exclusion; });
    if (!blocked) out.push_back(s);
  }
  return out;
}

inline std::vector<double> with_knot(std::span<const double> knots, double s) {
  std::vector<double> out(knots.begin(), knots.end());
  out.insert(std::upper_bound(out.begin(), out.end(), s), s);
  return out;
}

inline void score_stage(KnotStage& stage, const KnotObjective& obj) {
  try {
    const FitModel m = fit_coefficients(obj.data(), obj.spec_for(stage.knots), obj.config());
    stage.df = m.diagnostics.df;
    stage.gcv = std::isfinite(m.diagnostics.gcv) ? m.diagnostics.gcv : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    stage.gcv = std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// Refines a given knot vector under `config` (warm start, no addition).
inline KnotStage refine_knots(std::span<const double> knots, const FunctionalDataset& data,
                              const PenaltyConfig& config, const KnotSearchConfig& search) {
  const KnotObjective obj(data, config, search.order, search.min_gap(data));
  KnotStage stage;
  if (knots.empty()) {
    stage.objective = stage.start_objective = obj.value(knots);
  } else {
    const RefineResult rr = gauss_newton_refine(jupp(knots, data.lo, data.hi), obj, search.gauss_newton);
    stage.knots = jupp_inverse(rr.k);
    stage.start_objective = rr.start_objective;
    stage.objective = rr.objective;
    stage.iterations = rr.iterations;
    stage.converged = rr.converged;
    stage.line_search_failed = rr.line_search_failed;
  }
  detail::score_stage(stage, obj);
  return stage;
}

/// Gradual knot addition: each round inserts every admissible grid point
/// into the previously accepted knots, starts Gauss-Newton from the best
/// candidate, and records the refined knots. Stops at max_knots or, unless
/// fixed_p, once GCV fails to improve for `patience` consecutive rounds;
/// the stage with the best GCV is selected.
inline FreeKnotResult add_knots_gradually(const FunctionalDataset& data, const PenaltyConfig& config,
                                          const KnotSearchConfig& search) {
  data.validate();
  search.validate();
  const KnotObjective obj(data, config, search.order, search.min_gap(data));
  const int h = data.n_points();
  const double gcv_floor = 1e-14 * obj.data_scale() / (static_cast<double>(h) * data.n_curves());

  FreeKnotResult result;
  KnotStage base;
  base.objective = base.start_objective = obj.value({});
  detail::score_stage(base, obj);
  result.stages.push_back(base);

  int best = 0;
  int streak = 0;
  for (int i = 1; i <= search.max_knots; ++i) {
    if (i + search.order >= h) {
      if (search.fixed_p) {
        throw Error(ErrorKind::InvalidConfig, "freeknot",
                    "requested " + std::to_string(search.max_knots) + " knots but only " + std::to_string(h) +
                        " points");
      }
      break;
    }
    const auto& prev = result.stages.back().knots;
    const auto grid = detail::candidate_grid(data.lo, data.hi, search.grid_size, prev, h);
    std::vector<double> values(grid.size(), std::numeric_limits<double>::infinity());
    detail::parallel_for(grid.size(), search.threads, [&](std::size_t c) {
      try {
        values[c] = obj.value(detail::with_knot(prev, grid[c]));
      } catch (const Error&) {
      }
    });
    std::size_t arg = values.size();
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (std::isfinite(values[c]) && (arg == values.size() || values[c] < values[arg])) arg = c;
    }
    if (arg == values.size()) {
      throw Error(ErrorKind::AllCandidatesSingular, "freeknot",
                  "no admissible candidate knot in round " + std::to_string(i));
    }
    KnotStage stage = refine_knots(detail::with_knot(prev, grid[arg]), data, config, search);
    result.stages.push_back(stage);

    if (!search.fixed_p) {
      if (stage.gcv < result.stages[best].gcv * (1.0 - search.gcv_rel_tol) - gcv_floor) {
        best = i;
        streak = 0;
      } else if (++streak >= search.patience) {
        break;
      }
    }
  }
  const int selected = search.fixed_p ? static_cast<int>(result.stages.size()) - 1 : best;
  if (search.fixed_p && selected != search.max_knots) {
    throw Error(ErrorKind::InvalidConfig, "freeknot", "could not reach the requested number of knots");
  }
  result.p = selected;
  result.knots = result.stages[selected].knots;
  result.k = jupp(result.knots, data.lo, data.hi);
  result.model = fit_coefficients(data, obj.spec_for(result.knots), config);
  return result;
}

inline FitModel fit_free_knot(const FunctionalDataset& data, const PenaltyConfig& config,
                              const KnotSearchConfig& search) {
  return add_knots_gradually(data, config, search).model;
}

/// Search preset pinning p = n_basis - order interior knots.
inline KnotSearchConfig fixed_basis_search(int n_basis, int order = 4) {
  KnotSearchConfig s;
  s.order = order;
  s.max_knots = n_basis - order;
  s.fixed_p = true;
  return s;
}

}  // namespace fks
