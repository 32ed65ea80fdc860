#pragma once

// Shared test helpers: random inputs and independent reference
// implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fks/basis.hpp"
#include "fks/error.hpp"
#include "fks/smoother.hpp"

namespace fks::test {

// Kind of the fks::Error thrown by fn, or nullopt if nothing was thrown.
template <class F>
std::optional<ErrorKind> thrown(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::vector<double> random_knots(std::mt19937_64& rng, double a, double b, int p, double min_gap = 1e-3) {
  std::uniform_real_distribution<double> u(a, b);
  for (;;) {
    std::vector<double> k(static_cast<std::size_t>(p));
    for (auto& x : k) x = u(rng);
    std::sort(k.begin(), k.end());
    bool ok = true;
    double prev = a;
    for (double x : k) {
      ok = ok && x - prev > min_gap * (b - a);
      prev = x;
    }
    ok = ok && b - prev > min_gap * (b - a);
    if (ok) return k;
  }
}

inline BasisSpec random_spec(std::mt19937_64& rng, int max_order = 5, int max_knots = 6) {
  std::uniform_int_distribution<int> order(2, max_order);
  std::uniform_int_distribution<int> count(0, max_knots);
  std::uniform_real_distribution<double> lo(-2.0, 1.0);
  std::uniform_real_distribution<double> width(0.5, 4.0);
  const double a = lo(rng);
  const double b = a + width(rng);
  return make_basis_spec(a, b, order(rng), random_knots(rng, a, b, count(rng)));
}

// Textbook Cox-de Boor recursion (0/0 := 0), right-closed at the last knot.
inline double naive_bspline(const std::vector<double>& u, int i, int order, double t) {
  if (order == 1) {
    const double hi = u.back();
    if (t == hi) return (u[i] < u[i + 1] && u[i + 1] == hi) ? 1.0 : 0.0;
    return (u[i] <= t && t < u[i + 1]) ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double d1 = u[i + order - 1] - u[i];
  const double d2 = u[i + order] - u[i + 1];
  if (d1 > 0.0) v += (t - u[i]) / d1 * naive_bspline(u, i, order - 1, t);
  if (d2 > 0.0) v += (u[i + order] - t) / d2 * naive_bspline(u, i + 1, order - 1, t);
  return v;
}

// Composite Simpson on each knot span (the integrand is smooth inside spans).
inline double span_simpson(const BasisSpec& spec, const std::function<double(double)>& f, int panels = 2000) {
  std::vector<double> cuts{spec.lo};
  cuts.insert(cuts.end(), spec.interior.begin(), spec.interior.end());
  cuts.push_back(spec.hi);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s];
    const double h = (cuts[s + 1] - a) / (2 * panels);
    // endpoints nudged inward: derivatives of order r-1 jump at knots
    const double nudge = 1e-13 * (cuts[s + 1] - a);
    double acc = f(a + nudge) + f(cuts[s + 1] - nudge);
    for (int j = 1; j < 2 * panels; ++j) acc += (j % 2 ? 4.0 : 2.0) * f(a + j * h);
    total += acc * h / 3.0;
  }
  return total;
}

inline FunctionalDataset make_dataset(std::vector<double> t, Eigen::MatrixXd y, double lo, double hi) {
  FunctionalDataset d;
  d.t = std::move(t);
  d.y = std::move(y);
  d.lo = lo;
  d.hi = hi;
  return d;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
  t.back() = b;
  return t;
}

// Dataset sampled from f(curve, t) on the given grid.
inline FunctionalDataset sample(const std::vector<double>& t, int curves, double lo, double hi,
                                const std::function<double(int, double)>& f) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(t.size()), curves);
  for (int j = 0; j < curves; ++j) {
    for (std::size_t i = 0; i < t.size(); ++i) y(static_cast<Eigen::Index>(i), j) = f(j, t[i]);
  }
  return make_dataset(t, y, lo, hi);
}

inline std::string test_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "fks_tests";
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Writes `text` to a fresh file under test_dir().
inline std::string temp_file(const std::string& name, const std::string& text) {
  const auto path = test_dir() + "/" + name;
  std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
  return path;
}

}  // namespace fks::test
