#pragma once

// GCV selection of (lambda1, lambda2) over a log-spaced grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fks/detail/parallel.hpp"
#include "fks/error.hpp"
#include "fks/freeknot.hpp"
#include "fks/smoother.hpp"

namespace fks {

struct LambdaGrid {
  std::vector<double> values;

  static LambdaGrid from_exponents(std::span<const int> exponents) {
    LambdaGrid g;
    for (int e : exponents) g.values.push_back(std::pow(10.0, e));
    std::sort(g.values.begin(), g.values.end());
    g.validate();
    return g;
  }

  /// 10^l for l = -8..4.
  static LambdaGrid standard() {
    std::vector<int> e;
    for (int l = -8; l <= 4; ++l) e.push_back(l);
    return from_exponents(e);
  }

  void validate() const {
    if (values.empty()) {
      throw Error(ErrorKind::InvalidConfig, "lambda_select", "lambda grid is empty");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i]) || (i > 0 && !(values[i - 1] < values[i]))) {
        throw Error(ErrorKind::InvalidConfig, "lambda_select", "lambda values must be positive, finite and increasing");
      }
    }
  }
};

enum class KnotMode { Fixed, Free };

/// What each cell fits. Fixed mode uses `spec` as is. Free mode refines
/// `warm_knots` (or, when empty, the FS0 free-knot solution computed once)
/// under each cell's penalty.
struct GridTarget {
  KnotMode mode = KnotMode::Fixed;
  BasisSpec spec;
  KnotSearchConfig search;
  std::vector<double> warm_knots;
};

struct GridSearchResult {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double best_gcv = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lambda1_values;  // rows of `scores`
  std::vector<double> lambda2_values;  // columns of `scores`
  Eigen::MatrixXd scores;              // NaN marks a failed cell
  std::vector<std::string> failures;
};

namespace detail {

inline GridSearchResult run_cells(const FunctionalDataset& data, const GridTarget& target,
                                  std::vector<double> l1, std::vector<double> l2, int threads) {
  data.validate();
  GridTarget resolved = target;
  if (resolved.mode == KnotMode::Free && resolved.warm_knots.empty()) {
    resolved.warm_knots = add_knots_gradually(data, PenaltyConfig{}, resolved.search).knots;
  }
  const std::size_t rows = l1.size();
  const std::size_t cols = l2.size();
  GridSearchResult out;
  out.scores = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                                         std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(rows * cols);
  parallel_for(rows * cols, threads, [&](std::size_t cell) {
    const std::size_t i = cell / cols;
    const std::size_t j = cell % cols;
    const PenaltyConfig config{l1[i], l2[j], {}};
    try {
      double gcv = std::numeric_limits<double>::quiet_NaN();
      if (resolved.mode == KnotMode::Fixed) {
        gcv = fit_coefficients(data, resolved.spec, config).diagnostics.gcv;
      } else {
        gcv = refine_knots(resolved.warm_knots, data, config, resolved.search).gcv;
      }
      if (std::isfinite(gcv)) {
        out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gcv;
      } else {
        errors[cell] = "DegenerateDenominator";
      }
    } catch (const Error& e) {
      errors[cell] = e.what();
    }
  });
  for (std::size_t cell = 0; cell < errors.size(); ++cell) {
    if (!errors[cell].empty()) {
      out.failures.push_back("cell(" + std::to_string(cell / cols) + "," + std::to_string(cell % cols) +
                             "): " + errors[cell]);
    }
  }
  // argmin; exact ties go to the larger lambda1 + lambda2
  bool found = false;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double s = out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (!std::isfinite(s)) continue;
      const bool better = !found || s < out.best_gcv ||
                          (s == out.best_gcv && l1[i] + l2[j] > out.lambda1 + out.lambda2);
      if (better) {
        found = true;
        out.best_gcv = s;
        out.lambda1 = l1[i];
        out.lambda2 = l2[j];
      }
    }
  }
  if (!found) {
    throw Error(ErrorKind::AllCellsFailed, "lambda_select", "every grid cell failed to fit");
  }
  out.lambda1_values = std::move(l1);
  out.lambda2_values = std::move(l2);
  return out;
}

}  // namespace detail

/// Full L x L search; rows index lambda1, columns lambda2.
inline GridSearchResult gcv_grid_search(const FunctionalDataset& data, const GridTarget& target,
                                        const LambdaGrid& grid, int threads = 1) {
  grid.validate();
  return detail::run_cells(data, target, grid.values, grid.values, threads);
}

/// One-dimensional search along lambda2 with lambda1 pinned (FS1 uses 0).
inline GridSearchResult gcv_line_search(const FunctionalDataset& data, const GridTarget& target,
                                        const LambdaGrid& grid, double pinned_lambda1 = 0.0, int threads = 1) {
  grid.validate();
  if (!(pinned_lambda1 >= 0.0) || !std::isfinite(pinned_lambda1)) {
    throw Error(ErrorKind::InvalidConfig, "lambda_select", "pinned lambda1 must be finite and >= 0");
  }
  return detail::run_cells(data, target, {pinned_lambda1}, grid.values, threads);
}

}  // namespace fks
