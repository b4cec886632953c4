#include "bds/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bds::report {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::size_t column(const store::CsvTable& table, const std::string& name) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) throw std::invalid_argument("unknown column '" + name + "'");
  return static_cast<std::size_t>(it - table.header.begin());
}

double parse(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return NAN;
  return v;
}

// 1-2-5 step giving roughly `target` intervals over [lo, hi].
double tick_step(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
  return nice * mag;
}

struct Range {
  double lo = INFINITY;
  double hi = -INFINITY;
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(hi > lo)) {
      const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

std::vector<Series> collect_series(const store::CsvTable& table, const std::string& x_column,
                                   const std::string& y_column) {
  const std::size_t xi = column(table, x_column);
  const std::size_t yi = column(table, y_column);
  if (table.rows.empty()) throw std::invalid_argument("results CSV has no rows");
  const std::size_t subject = column(table, "subject");
  const std::size_t method = column(table, "method");
  const std::size_t similarity = column(table, "similarity");
  const auto ci_it = std::find(table.header.begin(), table.header.end(), "ci_" + y_column);
  const bool has_ci = ci_it != table.header.end();
  const auto ci = static_cast<std::size_t>(ci_it - table.header.begin());

  const bool use_all = std::any_of(table.rows.begin(), table.rows.end(),
                                   [&](const auto& r) { return r.at(subject) == "all"; });
  std::map<std::string, Series> grouped;
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw std::invalid_argument("ragged CSV row");
    if (use_all && r[subject] != "all") continue;
    std::string label = r[method] + " (" + r[similarity] + ")";
    if (!use_all) label = r[subject] + ": " + label;
    const double x = parse(r[xi]);
    const double y = parse(r[yi]);
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    auto& s = grouped[label];
    s.label = label;
    s.x.push_back(x);
    s.y.push_back(y);
    if (has_ci) {
      const double c = parse(r[ci]);
      s.ci.push_back(std::isfinite(c) ? c : 0.0);
    }
  }

  std::vector<Series> out;
  for (auto& [_, s] : grouped) {
    std::vector<std::size_t> order(s.x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    Series sorted;
    sorted.label = s.label;
    for (std::size_t k : order) {
      sorted.x.push_back(s.x[k]);
      sorted.y.push_back(s.y[k]);
      if (!s.ci.empty()) sorted.ci.push_back(s.ci[k]);
    }
    out.push_back(std::move(sorted));
  }
  return out;
}

std::string render_svg(const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label) {
  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      xr.add(s.x[k]);
      const double c = s.ci.empty() ? 0.0 : s.ci[k];
      yr.add(s.y[k] - c);
      yr.add(s.y[k] + c);
    }
  }
  if (!std::isfinite(xr.lo)) {
    xr = {0.0, 1.0};
    yr = {0.0, 1.0};
  }
  xr.pad();
  yr.pad();

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth, "%.0f") << "\" height=\""
    << fmt(kHeight, "%.0f") << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes and ticks
  o << "<g stroke=\"black\" fill=\"none\">\n";
  o << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw)
    << "\" height=\"" << fmt(ph) << "\"/>\n";
  o << "</g>\n";
  const double xs = tick_step(xr.lo, xr.hi, 6);
  const double ys = tick_step(yr.lo, yr.hi, 6);
  o << "<g stroke=\"#cccccc\">\n";
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
    o << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(px(t))
      << "\" y2=\"" << fmt(kTop + ph) << "\"/>\n";
  }
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
    o << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << fmt(kLeft + pw)
      << "\" y2=\"" << fmt(py(t)) << "\"/>\n";
  }
  o << "</g>\n<g fill=\"black\">\n";
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
    o << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(kTop + ph + 16) << "\" text-anchor=\"middle\">"
      << fmt(std::abs(t) < 1e-12 * xs ? 0.0 : t, "%.4g") << "</text>\n";
  }
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
    o << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(py(t) + 4) << "\" text-anchor=\"end\">"
      << fmt(std::abs(t) < 1e-12 * ys ? 0.0 : t, "%.4g") << "</text>\n";
  }
  o << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 16)
    << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << fmt(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";
  o << "</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (!s.ci.empty() && s.x.size() > 1) {
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k) o << fmt(px(s.x[k])) << ',' << fmt(py(s.y[k] + s.ci[k])) << ' ';
      for (std::size_t k = s.x.size(); k-- > 0;) o << fmt(px(s.x[k])) << ',' << fmt(py(s.y[k] - s.ci[k])) << ' ';
      o << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      o << (k ? " " : "") << fmt(px(s.x[k])) << ',' << fmt(py(s.y[k]));
    }
    o << "\"/>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      o << "<circle cx=\"" << fmt(px(s.x[k])) << "\" cy=\"" << fmt(py(s.y[k])) << "\" r=\"2.5\" fill=\""
        << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18 * static_cast<double>(i);
    o << "<line x1=\"" << fmt(kLeft + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(kLeft + pw + 32)
      << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fmt(kLeft + pw + 36) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_report(const std::string& csv_path, const std::string& x_column,
                  const std::string& y_column, const std::string& svg_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  const store::CsvTable table = store::read_csv(in);
  if (table.header.empty()) throw std::invalid_argument(csv_path + ": empty CSV");
  const auto series = collect_series(table, x_column, y_column);
  const std::string svg = render_svg(series, x_column, y_column);
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + svg_path);
  out << svg;
  if (!out) throw std::runtime_error("write failed: " + svg_path);
}

}  // namespace bds::report
