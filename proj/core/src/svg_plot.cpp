#include "qstrat/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 110.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;
constexpr int kTicks = 5;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

using PointKey = std::tuple<double, double, double, double, int, double>;

PointKey point_key(const ResultRow& r) { return {r.gamma1, r.noise1, r.gamma2, r.noise2, r.n, r.epsilon}; }

double column(const ResultRow& r, const std::string& name) {
  if (name == "gamma1") return r.gamma1;
  if (name == "gamma2") return r.gamma2;
  if (name == "noise2") return r.noise2;
  return r.noise1;
}

std::string describe(const PointKey& k, const char* mode) {
  const auto& [g1, n1, g2, n2, n, eps] = k;
  return "gamma1=" + format_csv_real(g1) + " noise1=" + format_csv_real(n1) + " gamma2=" + format_csv_real(g2) +
         " noise2=" + format_csv_real(n2) + " n=" + std::to_string(n) + " epsilon=" + format_csv_real(eps) +
         " mode=" + mode;
}

struct Range {
  double lo;
  double hi;
};

Range padded(double lo, double hi, double min_half_width) {
  if (hi - lo < 2.0 * min_half_width) {
    const double mid = 0.5 * (lo + hi);
    return {mid - min_half_width, mid + min_half_width};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

GapPlot gap_series(const std::vector<ResultRow>& rows, const std::string& quantity) {
  std::map<PointKey, double> adaptive;
  std::map<PointKey, double> parallel;
  std::vector<const ResultRow*> selected;
  for (const auto& r : rows) {
    if (r.quantity != quantity) continue;
    selected.push_back(&r);
    if (r.mode == "adaptive") adaptive[point_key(r)] = r.value;
    if (r.mode == "parallel") parallel[point_key(r)] = r.value;
  }
  if (selected.empty()) throw RenderError("the CSV has no rows for quantity '" + quantity + "'");

  std::string missing;
  for (const auto& [k, v] : adaptive) {
    if (!parallel.count(k)) missing += "\n  " + describe(k, "parallel");
  }
  for (const auto& [k, v] : parallel) {
    if (!adaptive.count(k)) missing += "\n  " + describe(k, "adaptive");
  }
  if (!missing.empty()) throw RenderError("missing rows for quantity '" + quantity + "':" + missing);

  GapPlot plot;
  plot.x_column = "noise1";
  for (const char* name : {"gamma1", "noise1", "gamma2", "noise2"}) {
    std::set<double> distinct;
    for (const auto* r : selected) distinct.insert(column(*r, name));
    if (distinct.size() > 1) {
      plot.x_column = name;
      break;
    }
  }

  std::map<std::pair<int, double>, GapSeries> by_series;
  for (const auto& [k, a] : adaptive) {
    const double d = a - parallel.at(k);
    if (!std::isfinite(d)) continue;
    const int n = std::get<4>(k);
    const double eps = std::get<5>(k);
    auto& s = by_series[{n, eps}];
    s.n = n;
    s.epsilon = eps;
    const auto& [g1, n1, g2, n2, nn, e] = k;
    ResultRow probe;
    probe.gamma1 = g1;
    probe.noise1 = n1;
    probe.gamma2 = g2;
    probe.noise2 = n2;
    s.x.push_back(column(probe, plot.x_column));
    s.gap.push_back(d);
  }
  for (auto& [key, s] : by_series) {
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return s.x[i] < s.x[j]; });
    GapSeries sorted{s.n, s.epsilon, {}, {}};
    for (auto i : order) {
      sorted.x.push_back(s.x[i]);
      sorted.gap.push_back(s.gap[i]);
    }
    plot.series.push_back(std::move(sorted));
  }
  return plot;
}

std::string render_svg(const GapPlot& plot, const std::string& quantity) {
  double xlo = INFINITY, xhi = -INFINITY, ylo = 0.0, yhi = 0.0;
  std::set<double> epsilons;
  for (const auto& s : plot.series) {
    epsilons.insert(s.epsilon);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.gap[i]);
      yhi = std::max(yhi, s.gap[i]);
    }
  }
  if (!std::isfinite(xlo)) {
    xlo = 0.0;
    xhi = 1.0;
  }
  const Range xr = padded(xlo, xhi, 0.05);
  const Range yr = padded(ylo, yhi, 1e-6);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
       fmt("%.0f", kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt("%.2f", kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + quantity +
       ": adaptive minus parallel</text>\n";

  // Frame, ticks and grid.
  s += "<rect x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", kTop) + "\" width=\"" + fmt("%.2f", pw) +
       "\" height=\"" + fmt("%.2f", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= kTicks; ++t) {
    const double xv = xr.lo + (xr.hi - xr.lo) * t / kTicks;
    const double yv = yr.lo + (yr.hi - yr.lo) * t / kTicks;
    const double X = px(xv);
    const double Y = py(yv);
    s += "<line x1=\"" + fmt("%.2f", X) + "\" y1=\"" + fmt("%.2f", kTop + ph) + "\" x2=\"" + fmt("%.2f", X) +
         "\" y2=\"" + fmt("%.2f", kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt("%.2f", X) + "\" y=\"" + fmt("%.2f", kTop + ph + 18) + "\" text-anchor=\"middle\">" +
         fmt("%.3g", xv) + "</text>\n";
    s += "<line x1=\"" + fmt("%.2f", kLeft - 5) + "\" y1=\"" + fmt("%.2f", Y) + "\" x2=\"" + fmt("%.2f", kLeft + pw) +
         "\" y2=\"" + fmt("%.2f", Y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fmt("%.2f", kLeft - 8) + "\" y=\"" + fmt("%.2f", Y + 4) + "\" text-anchor=\"end\">" +
         fmt("%.3g", yv) + "</text>\n";
  }
  if (yr.lo < 0.0 && yr.hi > 0.0) {
    s += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", py(0.0)) + "\" x2=\"" + fmt("%.2f", kLeft + pw) +
         "\" y2=\"" + fmt("%.2f", py(0.0)) + "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
  }
  s += "<text x=\"" + fmt("%.2f", kLeft + pw / 2) + "\" y=\"" + fmt("%.2f", kHeight - 12) +
       "\" text-anchor=\"middle\">" + plot.x_column + "</text>\n";
  s += "<text x=\"18\" y=\"" + fmt("%.2f", kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       fmt("%.2f", kTop + ph / 2) + ")\">adaptive - parallel</text>\n";

  // Series.
  const bool show_eps = epsilons.size() > 1;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& ser = plot.series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (i) pts += ' ';
      pts += fmt("%.2f", px(ser.x[i])) + ',' + fmt("%.2f", py(ser.gap[i]));
    }
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      s += "<circle cx=\"" + fmt("%.2f", px(ser.x[i])) + "\" cy=\"" + fmt("%.2f", py(ser.gap[i])) +
           "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    std::string label = "n=" + std::to_string(ser.n);
    if (show_eps) label += " eps=" + format_csv_real(ser.epsilon);
    s += "<line x1=\"" + fmt("%.2f", kLeft + pw + 12) + "\" y1=\"" + fmt("%.2f", ly) + "\" x2=\"" +
         fmt("%.2f", kLeft + pw + 32) + "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"1.5\"/>\n";
    s += "<text x=\"" + fmt("%.2f", kLeft + pw + 38) + "\" y=\"" + fmt("%.2f", ly + 4) + "\">" + label + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void render_plot(const std::string& csv_path, const std::string& quantity, const std::string& out_svg) {
  const auto rows = read_csv_file(csv_path);
  write_file_atomic(out_svg, render_svg(gap_series(rows, quantity), quantity));
}

}  // namespace qstrat
