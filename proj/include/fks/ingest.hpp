#pragma once

// Multi-series CSV ingestion (wide or long layout) and per-series z-score
// standardization.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fks/detail/csv.hpp"
#include "fks/error.hpp"
#include "fks/smoother.hpp"

namespace fks {

/// values(t, i) is series i at time t; missing cells hold NaN and are
/// flagged in `missing`.
struct RawSeriesTable {
  std::vector<std::string> series;
  std::vector<std::string> times;
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
  std::vector<std::string> notes;     // provenance (interpolations)
  std::vector<std::string> warnings;  // excluded series

  int n_times() const { return static_cast<int>(times.size()); }
  int n_series() const { return static_cast<int>(series.size()); }
};

enum class CsvLayout { Wide, Long };

inline CsvLayout parse_layout(std::string_view s) {
  if (s == "wide") return CsvLayout::Wide;
  if (s == "long") return CsvLayout::Long;
  throw Error(ErrorKind::InvalidConfig, "ingest", "unknown layout '" + std::string(s) + "'");
}

namespace detail {

inline bool is_integer_label(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Integer time labels sort numerically, anything else (ISO-8601 dates)
// lexicographically.
inline std::vector<std::size_t> time_order(const std::vector<std::string>& times) {
  std::vector<std::size_t> idx(times.size());
  std::iota(idx.begin(), idx.end(), 0);
  const bool numeric = std::all_of(times.begin(), times.end(), is_integer_label);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (numeric) return std::stoll(times[a]) < std::stoll(times[b]);
    return times[a] < times[b];
  });
  return idx;
}

inline RawSeriesTable assemble(std::vector<std::string> series, const std::vector<std::string>& times,
                               const std::map<std::pair<std::size_t, std::size_t>, double>& cells) {
  const auto order = time_order(times);
  RawSeriesTable t;
  t.series = std::move(series);
  const auto n_t = static_cast<Eigen::Index>(times.size());
  const auto n_s = static_cast<Eigen::Index>(t.series.size());
  t.values = Eigen::MatrixXd::Constant(n_t, n_s, std::numeric_limits<double>::quiet_NaN());
  t.missing = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_t, n_s, true);
  std::vector<std::size_t> rank(times.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = r;
    t.times.push_back(times[order[r]]);
  }
  for (const auto& [key, v] : cells) {
    const auto row = static_cast<Eigen::Index>(rank[key.first]);
    const auto col = static_cast<Eigen::Index>(key.second);
    t.values(row, col) = v;
    t.missing(row, col) = false;
  }
  return t;
}

}  // namespace detail

inline RawSeriesTable load_csv(const std::string& path, CsvLayout layout) {
  const auto file = detail::read_csv(path);
  if (file.rows.size() < 2) {
    throw Error(ErrorKind::EmptyTable, "ingest", "'" + path + "' has no data rows");
  }
  std::vector<std::string> series;
  std::vector<std::string> times;
  std::map<std::pair<std::size_t, std::size_t>, double> cells;

  if (layout == CsvLayout::Wide) {
    const auto& header = file.rows.front();
    if (header.fields.size() < 2) {
      throw Error(ErrorKind::EmptyTable, "ingest", "wide layout needs a time column and at least one series");
    }
    series.assign(header.fields.begin() + 1, header.fields.end());
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (std::find(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(i), series[i]) !=
          series.begin() + static_cast<std::ptrdiff_t>(i)) {
        throw Error(ErrorKind::DuplicateCell, "ingest", "duplicate series column '" + series[i] + "'");
      }
    }
    std::map<std::string, std::size_t> seen;
    for (std::size_t r = 1; r < file.rows.size(); ++r) {
      const auto& row = file.rows[r];
      if (row.fields.size() != header.fields.size()) {
        throw Error(ErrorKind::ParseError, "ingest",
                    "line " + std::to_string(row.line) + ": expected " + std::to_string(header.fields.size()) +
                        " fields, got " + std::to_string(row.fields.size()));
      }
      const std::string& time = row.fields[0];
      if (time.empty()) {
        throw Error(ErrorKind::ParseError, "ingest", "line " + std::to_string(row.line) + ", column 1: empty time");
      }
      if (!seen.emplace(time, times.size()).second) {
        throw Error(ErrorKind::DuplicateCell, "ingest",
                    "duplicate cell (" + series.front() + ", " + time + ") at line " + std::to_string(row.line));
      }
      const std::size_t ti = times.size();
      times.push_back(time);
      for (std::size_t c = 1; c < row.fields.size(); ++c) {
        if (detail::is_missing(row.fields[c])) continue;
        cells[{ti, c - 1}] = detail::require_double(row.fields[c], row.line, static_cast<int>(c + 1));
      }
    }
  } else {
    std::size_t start = 0;
    const auto& first = file.rows.front();
    if (first.fields.size() == 3 && !detail::parse_double(first.fields[2]) && !detail::is_missing(first.fields[2])) {
      start = 1;  // header row
    }
    std::map<std::string, std::size_t> series_index;
    std::map<std::string, std::size_t> time_index;
    for (std::size_t r = start; r < file.rows.size(); ++r) {
      const auto& row = file.rows[r];
      if (row.fields.size() != 3) {
        throw Error(ErrorKind::ParseError, "ingest",
                    "line " + std::to_string(row.line) + ": long layout expects series,time,value");
      }
      const auto [si, new_s] = series_index.emplace(row.fields[0], series.size());
      if (new_s) series.push_back(row.fields[0]);
      const auto [ti, new_t] = time_index.emplace(row.fields[1], times.size());
      if (new_t) times.push_back(row.fields[1]);
      const std::pair key{ti->second, si->second};
      if (cells.count(key) != 0) {
        throw Error(ErrorKind::DuplicateCell, "ingest",
                    "duplicate cell (" + row.fields[0] + ", " + row.fields[1] + ") at line " + std::to_string(row.line));
      }
      if (detail::is_missing(row.fields[2])) {
        cells[key] = std::numeric_limits<double>::quiet_NaN();
      } else {
        cells[key] = detail::require_double(row.fields[2], row.line, 3);
      }
    }
    // explicit NA rows are registered for duplicate detection but stay missing
    for (auto it = cells.begin(); it != cells.end();) {
      it = std::isnan(it->second) ? cells.erase(it) : std::next(it);
    }
  }
  if (series.empty() || times.empty()) {
    throw Error(ErrorKind::EmptyTable, "ingest", "'" + path + "' contains no series");
  }
  return detail::assemble(std::move(series), times, cells);
}

/// Keeps time labels within [from, to] (either bound may be empty), using
/// the same ordering as load_csv.
inline RawSeriesTable restrict_window(const RawSeriesTable& table, const std::string& from, const std::string& to) {
  const bool numeric = std::all_of(table.times.begin(), table.times.end(), detail::is_integer_label) &&
                       (from.empty() || detail::is_integer_label(from)) &&
                       (to.empty() || detail::is_integer_label(to));
  auto before = [&](const std::string& a, const std::string& b) {
    return numeric ? std::stoll(a) < std::stoll(b) : a < b;
  };
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < table.n_times(); ++i) {
    const auto& t = table.times[static_cast<std::size_t>(i)];
    if ((!from.empty() && before(t, from)) || (!to.empty() && before(to, t))) continue;
    keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorKind::EmptyTable, "ingest", "no time points inside the requested window");
  RawSeriesTable out;
  out.series = table.series;
  out.notes = table.notes;
  out.warnings = table.warnings;
  out.values.resize(static_cast<Eigen::Index>(keep.size()), table.values.cols());
  out.missing.resize(out.values.rows(), out.values.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.times.push_back(table.times[static_cast<std::size_t>(keep[r])]);
    out.values.row(static_cast<Eigen::Index>(r)) = table.values.row(keep[r]);
    out.missing.row(static_cast<Eigen::Index>(r)) = table.missing.row(keep[r]);
  }
  return out;
}

struct StandardizeOptions {
  double max_missing_fraction = 0.1;
  // false: a constant series raises ZeroVariance; true: it is dropped with a warning
  bool exclude_zero_variance = false;
};

/// y* = (y - mean) / s per series, with s the (T-1)-denominator standard
/// deviation. Gaps are filled by linear interpolation on the time index
/// (flat at the ends) first; series with too many gaps are dropped.
inline RawSeriesTable standardize(const RawSeriesTable& table, const StandardizeOptions& options = {}) {
  const int n_t = table.n_times();
  if (n_t < 2) {
    throw Error(ErrorKind::EmptyTable, "ingest", "standardization needs at least two time points");
  }
  RawSeriesTable out;
  out.times = table.times;
  out.notes = table.notes;
  out.warnings = table.warnings;
  std::vector<Eigen::VectorXd> columns;
  for (int s = 0; s < table.n_series(); ++s) {
    const std::string& name = table.series[s];
    std::vector<int> observed;
    for (int t = 0; t < n_t; ++t) {
      if (!table.missing(t, s)) observed.push_back(t);
    }
    const int gaps = n_t - static_cast<int>(observed.size());
    if (observed.size() < 2 || gaps > options.max_missing_fraction * n_t) {
      out.warnings.push_back("series '" + name + "' excluded: " + std::to_string(gaps) + " of " +
                             std::to_string(n_t) + " values missing");
      continue;
    }
    Eigen::VectorXd y(n_t);
    for (int t = 0; t < n_t; ++t) {
      if (!table.missing(t, s)) {
        y(t) = table.values(t, s);
        continue;
      }
      const auto hi = std::lower_bound(observed.begin(), observed.end(), t);
      if (hi == observed.begin()) {
        y(t) = table.values(*hi, s);
      } else if (hi == observed.end()) {
        y(t) = table.values(observed.back(), s);
      } else {
        const int a = *(hi - 1);
        const int b = *hi;
        const double w = static_cast<double>(t - a) / (b - a);
        y(t) = (1.0 - w) * table.values(a, s) + w * table.values(b, s);
      }
    }
    if (gaps > 0) {
      out.notes.push_back("series '" + name + "': " + std::to_string(gaps) + " missing values linearly interpolated");
    }
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / (n_t - 1));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      if (!options.exclude_zero_variance) {
        throw Error(ErrorKind::ZeroVariance, "ingest", "series '" + name + "' has zero variance");
      }
      out.warnings.push_back("series '" + name + "' excluded: zero variance");
      continue;
    }
    out.series.push_back(name);
    columns.push_back((y.array() - mean) / sd);
  }
  if (columns.empty()) {
    throw Error(ErrorKind::EmptyTable, "ingest", "no series left after standardization");
  }
  out.values.resize(n_t, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) out.values.col(static_cast<Eigen::Index>(c)) = columns[c];
  out.missing = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_t, out.values.cols(), false);
  return out;
}

/// Maps time index 0..T-1 onto [0, 1] for basis fitting.
inline FunctionalDataset to_dataset(const RawSeriesTable& table) {
  if (table.missing.any()) {
    throw Error(ErrorKind::NonFiniteInput, "ingest", "table still has missing cells; standardize first");
  }
  const int n_t = table.n_times();
  if (n_t < 2) throw Error(ErrorKind::EmptyTable, "ingest", "need at least two time points");
  FunctionalDataset d;
  d.t.resize(static_cast<std::size_t>(n_t));
  for (int i = 0; i < n_t; ++i) d.t[i] = static_cast<double>(i) / (n_t - 1);
  d.t.back() = 1.0;
  d.y = table.values;
  d.lo = 0.0;
  d.hi = 1.0;
  return d;
}

}  // namespace fks
