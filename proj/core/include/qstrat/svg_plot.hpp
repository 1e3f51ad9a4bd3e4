#pragma once

// Line plots of adaptive-minus-parallel differences from sweep CSVs.

#include <string>
#include <vector>

#include "qstrat/sweep.hpp"

namespace qstrat {

struct GapSeries {
  int n = 1;
  double epsilon = 0.0;
  std::vector<double> x;
  /// adaptive value minus parallel value at each x.
  std::vector<double> gap;
};

struct GapPlot {
  /// The CSV column that varies across the rows (noise1 when none does).
  std::string x_column;
  std::vector<GapSeries> series;
};

/// Pairs adaptive and parallel rows of `quantity`.  Throws RenderError
/// listing every key whose counterpart mode is absent, or when no row has
/// the quantity.  Points with a non-finite difference are dropped.
GapPlot gap_series(const std::vector<ResultRow>& rows, const std::string& quantity);

/// Deterministic SVG text: one polyline per series, labeled axes.
std::string render_svg(const GapPlot& plot, const std::string& quantity);

/// Reads the CSV, renders and writes the SVG atomically.
void render_plot(const std::string& csv_path, const std::string& quantity, const std::string& out_svg);

}  // namespace qstrat
