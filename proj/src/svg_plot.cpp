#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rctmnar/report_io.hpp"

// Minimal hand-emitted SVG line charts: lines, CI ribbons, axes, legend.
// These are inspection aids, not publication figures.

namespace rctmnar {

namespace {

struct Series {
  std::string label;
  std::string color;
  std::string dash;  // stroke-dasharray, empty for solid
  std::vector<double> x, y, y_lo, y_hi;  // ribbons optional (empty)
};

const char* kPalette[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
const char* kDashes[] = {"", "7 3", "2 2", "9 3 2 3"};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Chart {
  std::string title, x_label, y_label;
  std::vector<Series> series;

  std::string render() const {
    const double width = 640, height = 420;
    const double left = 64, right = width - 150, top = 36, bottom = height - 48;

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series) {
      for (double v : s.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
      for (double v : s.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
      for (double v : s.y_lo) y_min = std::min(y_min, v);
      for (double v : s.y_hi) y_max = std::max(y_max, v);
    }
    if (x_min > x_max) { x_min = 0; x_max = 1; }
    if (y_min > y_max) { y_min = 0; y_max = 1; }
    if (x_max == x_min) { x_min -= 0.5; x_max += 0.5; }
    if (y_max == y_min) { y_min -= 0.5; y_max += 0.5; }
    const double y_pad = 0.06 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    auto sx = [&](double v) { return left + (v - x_min) / (x_max - x_min) * (right - left); };
    auto sy = [&](double v) { return bottom - (v - y_min) / (y_max - y_min) * (bottom - top); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << (left + right) / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

    // axes with 5 ticks each
    out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = x_min + (x_max - x_min) * i / 4.0;
      const double fy = y_min + (y_max - y_min) * i / 4.0;
      out << "<line x1=\"" << sx(fx) << "\" y1=\"" << bottom << "\" x2=\"" << sx(fx) << "\" y2=\""
          << bottom + 4 << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << sx(fx) << "\" y=\"" << bottom + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
          << tick_label(fx) << "</text>\n";
      out << "<line x1=\"" << left - 4 << "\" y1=\"" << sy(fy) << "\" x2=\"" << left << "\" y2=\""
          << sy(fy) << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << left - 8 << "\" y=\"" << sy(fy) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << tick_label(fy) << "</text>\n";
    }
    out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (top + bottom) / 2 << ")\">" << y_label << "</text>\n";

    // zero reference when it lies inside the range
    if (y_min < 0.0 && y_max > 0.0)
      out << "<line x1=\"" << left << "\" y1=\"" << sy(0.0) << "\" x2=\"" << right << "\" y2=\""
          << sy(0.0) << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

    for (const auto& s : series) {
      if (!s.y_lo.empty() && s.y_lo.size() == s.x.size() && s.y_hi.size() == s.x.size()) {
        out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
          out << sx(s.x[i]) << "," << sy(s.y_hi[i]) << " ";
        for (std::size_t i = s.x.size(); i-- > 0;)
          out << sx(s.x[i]) << "," << sy(s.y_lo[i]) << " ";
        out << "\"/>\n";
      }
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
      if (!s.dash.empty()) out << " stroke-dasharray=\"" << s.dash << "\"";
      out << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
      out << "\"/>\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i])
            << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    }

    double ly = top + 6;
    for (const auto& s : series) {
      out << "<rect x=\"" << right + 10 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" "
          << "fill=\"" << s.color << "\"/>\n";
      out << "<text x=\"" << right + 27 << "\" y=\"" << ly + 1
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
      ly += 18;
    }
    out << "</svg>\n";
    return out.str();
  }
};

void write_chart(const Chart& chart, const std::string& path, std::vector<std::string>& files) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write plot: " + path);
  out << chart.render();
  files.push_back(path);
}

void sort_series(Series& s) {
  std::vector<std::size_t> order(s.x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
  Series sorted = s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.x[i] = s.x[order[i]];
    sorted.y[i] = s.y[order[i]];
    if (!s.y_lo.empty()) {
      sorted.y_lo[i] = s.y_lo[order[i]];
      sorted.y_hi[i] = s.y_hi[order[i]];
    }
  }
  s = std::move(sorted);
}

std::string estimand_title(const std::string& estimand) {
  if (estimand == "p0") return "P(O|T=0)";
  if (estimand == "p1") return "P(O|T=1)";
  if (estimand == "ate") return "ATE";
  return "avg-adj-logodds";
}

}  // namespace

std::vector<std::string> emit_plots(const MonteCarloResult& result, const std::string& out_dir) {
  if (result.rows.empty()) throw std::invalid_argument("empty Monte Carlo result");
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> files;

  std::set<std::int64_t> sizes;
  std::set<std::string> estimands, estimators;
  for (const auto& r : result.rows) {
    sizes.insert(r.n);
    estimands.insert(r.estimand);
    estimators.insert(r.estimator);
  }

  // bias vs effect, one panel per estimand, one line+ribbon per (estimator, n);
  // with the bound-range and missingness panels below this mirrors the
  // six-panel experiment figure layout
  for (const std::string estimand : {"p0", "p1", "ate", "aclor"}) {
    if (!estimands.count(estimand)) continue;
    Chart chart;
    chart.title = "bias of " + estimand_title(estimand) + " estimators";
    chart.x_label = "treatment impact on outcome (log-odds)";
    chart.y_label = "bias vs full-data estimate";
    int color = 0;
    for (const auto& estimator : estimators) {
      int dash = 0;
      for (std::int64_t n : sizes) {
        Series s;
        s.label = estimator + ", n=" + std::to_string(n);
        s.color = kPalette[color % 6];
        s.dash = kDashes[dash++ % 4];
        for (const auto& r : result.rows) {
          if (r.n != n || r.estimand != estimand || r.estimator != estimator) continue;
          s.x.push_back(r.effect);
          s.y.push_back(r.mean_bias);
          s.y_lo.push_back(r.ci_lo);
          s.y_hi.push_back(r.ci_hi);
        }
        if (!s.x.empty()) { sort_series(s); chart.series.push_back(std::move(s)); }
      }
      ++color;
    }
    if (chart.series.empty()) continue;
    write_chart(chart, out_dir + "/bias_" + estimand + ".svg", files);
  }

  // average bound range vs sample size (weighted estimators only)
  {
    Chart chart;
    chart.title = "average bound range";
    chart.x_label = "sample size";
    chart.y_label = "mean bound width";
    int color = 0;
    for (const std::string estimand : {"p0", "p1", "ate"}) {
      Series s;
      s.label = estimand_title(estimand);
      s.color = kPalette[color++ % 6];
      for (std::int64_t n : sizes) {
        double acc = 0.0;
        int cells = 0;
        for (const auto& r : result.rows) {
          if (r.n != n || r.estimand != estimand || r.estimator != "mnar") continue;
          acc += r.mean_bound_range;
          ++cells;
        }
        if (cells > 0) {
          s.x.push_back(static_cast<double>(n));
          s.y.push_back(acc / cells);
        }
      }
      if (!s.x.empty()) { sort_series(s); chart.series.push_back(std::move(s)); }
    }
    if (!chart.series.empty()) write_chart(chart, out_dir + "/bound_range.svg", files);
  }

  // missingness proportion vs effect, per arm and sample size
  {
    Chart chart;
    chart.title = "proportion of missing outcomes";
    chart.x_label = "treatment impact on outcome (log-odds)";
    chart.y_label = "P(A=0 | T)";
    int color = 0;
    for (std::int64_t n : sizes) {
      for (int arm = 0; arm < 2; ++arm) {
        Series s;
        s.label = "t=" + std::to_string(arm) + ", n=" + std::to_string(n);
        s.color = kPalette[color++ % 6];
        std::set<double> seen;
        for (const auto& r : result.rows) {
          if (r.n != n || !seen.insert(r.effect).second) continue;
          s.x.push_back(r.effect);
          s.y.push_back(arm == 0 ? r.missing_prop_t0 : r.missing_prop_t1);
        }
        if (!s.x.empty()) { sort_series(s); chart.series.push_back(std::move(s)); }
      }
    }
    if (!chart.series.empty()) write_chart(chart, out_dir + "/missingness.svg", files);
  }

  return files;
}

}  // namespace rctmnar
