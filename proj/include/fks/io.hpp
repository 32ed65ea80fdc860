#pragma once

// CSV readers/writers for datasets, labels and plain matrices. Header lines
// start with '#' and carry provenance (resolved config, seed, domain).

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fks/detail/csv.hpp"
#include "fks/error.hpp"
#include "fks/smoother.hpp"

namespace fks {

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cli", "cannot write '" + path + "'");
  return out;
}

inline void write_header(std::ostream& out, std::span<const std::string> header) {
  for (const auto& line : header) out << "# " << line << '\n';
}

}  // namespace detail

/// `t,curve_1,...,curve_n`, one row per sampling point.
inline void write_dataset(const std::string& path, const FunctionalDataset& data,
                          std::span<const std::string> header = {}) {
  auto out = detail::open_output(path);
  detail::write_header(out, header);
  out << "# domain: " << detail::format_double(data.lo) << ',' << detail::format_double(data.hi) << '\n';
  out << 't';
  for (Eigen::Index j = 0; j < data.y.cols(); ++j) out << ",curve_" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < data.t.size(); ++i) {
    out << detail::format_double(data.t[i]);
    for (Eigen::Index j = 0; j < data.y.cols(); ++j) {
      out << ',' << detail::format_double(data.y(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

/// Reads a dataset CSV. The domain comes from a `# domain: a,b` line when
/// present, otherwise from the first and last sampling points.
inline FunctionalDataset read_dataset(const std::string& path) {
  const auto file = detail::read_csv(path);
  if (file.rows.size() < 2) throw Error(ErrorKind::EmptyTable, "cli", "'" + path + "' has no data rows");
  const auto& header = file.rows.front();
  if (header.fields.size() < 2) throw Error(ErrorKind::EmptyTable, "cli", "'" + path + "' has no curve columns");
  const auto h = static_cast<Eigen::Index>(file.rows.size() - 1);
  const auto n = static_cast<Eigen::Index>(header.fields.size() - 1);
  FunctionalDataset d;
  d.y.resize(h, n);
  for (Eigen::Index i = 0; i < h; ++i) {
    const auto& row = file.rows[static_cast<std::size_t>(i) + 1];
    if (static_cast<Eigen::Index>(row.fields.size()) != n + 1) {
      throw Error(ErrorKind::ParseError, "cli",
                  "line " + std::to_string(row.line) + ": expected " + std::to_string(n + 1) + " fields");
    }
    d.t.push_back(detail::require_double(row.fields[0], row.line, 1));
    for (Eigen::Index j = 0; j < n; ++j) {
      d.y(i, j) = detail::require_double(row.fields[static_cast<std::size_t>(j) + 1], row.line, static_cast<int>(j) + 2);
    }
  }
  d.lo = d.t.front();
  d.hi = d.t.back();
  for (const auto& c : file.comments) {
    if (c.rfind("domain:", 0) != 0) continue;
    const auto parts = detail::split_csv_line(c.substr(7), 0);
    if (parts.size() == 2) {
      d.lo = detail::require_double(parts[0], 0, 1);
      d.hi = detail::require_double(parts[1], 0, 2);
    }
  }
  d.validate();
  return d;
}

inline void write_labels(const std::string& path, std::span<const int> labels,
                         std::span<const std::string> header = {}) {
  auto out = detail::open_output(path);
  detail::write_header(out, header);
  out << "curve_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << "curve_" << (i + 1) << ',' << labels[i] << '\n';
}

inline std::vector<int> read_labels(const std::string& path) {
  const auto file = detail::read_csv(path);
  std::vector<int> labels;
  for (std::size_t r = 1; r < file.rows.size(); ++r) {
    const auto& row = file.rows[r];
    if (row.fields.size() != 2) {
      throw Error(ErrorKind::ParseError, "cli", "line " + std::to_string(row.line) + ": expected curve_id,label");
    }
    const double v = detail::require_double(row.fields[1], row.line, 2);
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw Error(ErrorKind::EmptyTable, "cli", "'" + path + "' has no labels");
  return labels;
}

/// Generic numeric table with named columns.
inline void write_table(const std::string& path, std::span<const std::string> columns, const Eigen::MatrixXd& values,
                        std::span<const std::string> header = {}) {
  auto out = detail::open_output(path);
  detail::write_header(out, header);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << detail::format_double(values(i, j));
    }
    out << '\n';
  }
}

}  // namespace fks
