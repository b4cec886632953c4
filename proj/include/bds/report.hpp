#pragma once

// Line-plot SVG from a results CSV.

#include <string>
#include <vector>

#include "bds/store.hpp"

namespace bds::report {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> ci;  // half-widths, empty when the CSV has no ci_<y> column
};

/// One series per (method, similarity), points sorted by x. Rows of subject
/// "all" are used when present; otherwise every subject gets its own series.
/// Throws std::invalid_argument for unknown columns or a table without rows.
std::vector<Series> collect_series(const store::CsvTable& table, const std::string& x_column,
                                   const std::string& y_column);

std::string render_svg(const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label);

/// Reads `csv_path`, renders and writes `svg_path`.
void write_report(const std::string& csv_path, const std::string& x_column,
                  const std::string& y_column, const std::string& svg_path);

}  // namespace bds::report
