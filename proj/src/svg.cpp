#include "obsbandit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "obsbandit/errors.hpp"

namespace obsbandit::svg {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 830.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 452.0;

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3d8f5f", "#8d6cab",
                          "#c98a2b", "#4aa3a2", "#7f7f7f", "#b5651d",
                          "#2b2d42"};
constexpr int kPaletteSize = 9;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

/// Smallest "nice" value (1/2/2.5/5 x 10^k) at or above v.
double nice_ceil(double v) {
  if (!(v > 0.0)) return 1.0;
  const double expo = std::floor(std::log10(v));
  const double base = std::pow(10.0, expo);
  const double frac = v / base;
  for (double step : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (frac <= step + 1e-12) return step * base;
  }
  return 10.0 * base;
}

std::string text(double x, double y, const std::string& body,
                 const std::string& anchor = "start", int size = 13) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
         std::to_string(size) +
         "\" font-family=\"Helvetica,Arial,sans-serif\" text-anchor=\"" +
         anchor + "\">" + body + "</text>\n";
}

struct Frame {
  double x_min, x_max, y_min, y_max;
  double sx(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
  }
  double sy(double y) const {
    return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop);
  }
};

std::string axes(const Frame& f, const std::string& x_label,
                 const std::string& y_label) {
  std::string out;
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" +
         num(kRight) + "\" y2=\"" + num(kBottom) +
         "\" stroke=\"#222\" stroke-width=\"1\"/>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" +
         num(kLeft) + "\" y2=\"" + num(kBottom) +
         "\" stroke=\"#222\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = f.x_min + (f.x_max - f.x_min) * i / 5.0;
    const double fy = f.y_min + (f.y_max - f.y_min) * i / 5.0;
    const double px = f.sx(fx);
    const double py = f.sy(fy);
    out += "<line x1=\"" + num(px) + "\" y1=\"" + num(kBottom) + "\" x2=\"" +
           num(px) + "\" y2=\"" + num(kBottom + 5) +
           "\" stroke=\"#222\" stroke-width=\"1\"/>\n";
    out += text(px, kBottom + 20, num(fx), "middle", 11);
    out += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(py) +
           "\" stroke=\"#222\" stroke-width=\"1\"/>\n";
    out += text(kLeft - 8, py + 4, num(fy), "end", 11);
  }
  out += text((kLeft + kRight) / 2, kHeight - 24, x_label, "middle");
  out += "<text x=\"18\" y=\"" + num((kTop + kBottom) / 2) +
         "\" font-size=\"13\" font-family=\"Helvetica,Arial,sans-serif\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num((kTop + kBottom) / 2) + ")\">" + y_label + "</text>\n";
  return out;
}

std::string header() {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg "
         "xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(kWidth) + "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " +
         num(kWidth) + " " + num(kHeight) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<Series>& series,
                       const std::string& annotation) {
  if (series.empty()) throw SchemaError("line chart needs at least one series");

  Frame f{1e300, -1e300, 0.0, 0.0};
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw SchemaError("series '" + s.label + "' is empty or ragged");
    }
    for (double x : s.x) {
      f.x_min = std::min(f.x_min, x);
      f.x_max = std::max(f.x_max, x);
    }
    for (double y : s.y) f.y_max = std::max(f.y_max, y);
  }
  if (f.x_max <= f.x_min) f.x_max = f.x_min + 1.0;
  f.y_max = nice_ceil(f.y_max);

  std::string out = header();
  out += text((kLeft + kRight) / 2, 24, title, "middle", 16);
  out += axes(f, x_label, y_label);

  for (const auto& s : series) {
    // decimate long series deterministically, always keeping the last point
    const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 600);
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); i += stride) {
      points += num(f.sx(s.x[i])) + "," + num(f.sy(s.y[i])) + " ";
    }
    points += num(f.sx(s.x.back())) + "," + num(f.sy(s.y.back()));
    out += "<polyline fill=\"none\" stroke=\"" +
           std::string(kPalette[s.color_index % kPaletteSize]) +
           "\" stroke-width=\"1.6\"";
    if (s.dashed) out += " stroke-dasharray=\"6,4\"";
    out += " points=\"" + points + "\"/>\n";
  }

  double legend_y = kTop + 10;
  for (const auto& s : series) {
    const std::string color = kPalette[s.color_index % kPaletteSize];
    out += "<line x1=\"" + num(kRight - 150) + "\" y1=\"" + num(legend_y) +
           "\" x2=\"" + num(kRight - 120) + "\" y2=\"" + num(legend_y) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.6\"" +
           (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    out += text(kRight - 112, legend_y + 4, s.label, "start", 11);
    legend_y += 16;
  }

  out += text(kRight, kHeight - 8, annotation, "end", 10);
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::string& title, const std::string& y_label,
                      const std::vector<BarGroup>& groups,
                      const std::string& annotation) {
  if (groups.empty()) throw SchemaError("bar chart needs at least one group");

  double y_max = 0.0;
  for (const auto& g : groups) {
    y_max = std::max({y_max, g.mean, g.worst, g.percentile});
  }
  Frame f{0.0, 1.0, 0.0, nice_ceil(y_max)};

  std::string out = header();
  out += text((kLeft + kRight) / 2, 24, title, "middle", 16);
  out += axes(f, "", y_label);

  const double span = kRight - kLeft;
  const double group_width = span / static_cast<double>(groups.size());
  const double bar_width = group_width * 0.28;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    const double center = kLeft + group_width * (static_cast<double>(i) + 0.5);
    const double mean_x = center - bar_width - 2.0;
    const double worst_x = center + 2.0;
    const double mean_top = f.sy(g.mean);
    const double worst_top = f.sy(g.worst);
    out += "<rect x=\"" + num(mean_x) + "\" y=\"" + num(mean_top) +
           "\" width=\"" + num(bar_width) + "\" height=\"" +
           num(kBottom - mean_top) + "\" fill=\"" + kPalette[0] + "\"/>\n";
    out += "<rect x=\"" + num(worst_x) + "\" y=\"" + num(worst_top) +
           "\" width=\"" + num(bar_width) + "\" height=\"" +
           num(kBottom - worst_top) +
           "\" fill=\"none\" stroke=\"" + std::string(kPalette[1]) +
           "\" stroke-width=\"1.4\" stroke-dasharray=\"5,3\"/>\n";
    const double pct_y = f.sy(g.percentile);
    out += "<line x1=\"" + num(worst_x - 4) + "\" y1=\"" + num(pct_y) +
           "\" x2=\"" + num(worst_x + bar_width + 4) + "\" y2=\"" +
           num(pct_y) + "\" stroke=\"" + std::string(kPalette[2]) +
           "\" stroke-width=\"2\"/>\n";
    out += text(center, kBottom + 20, g.label, "middle", 11);
  }

  // legend
  out += "<rect x=\"" + num(kLeft + 10) + "\" y=\"" + num(kTop + 4) +
         "\" width=\"14\" height=\"10\" fill=\"" + std::string(kPalette[0]) +
         "\"/>\n" + text(kLeft + 30, kTop + 13, "mean", "start", 11);
  out += "<rect x=\"" + num(kLeft + 10) + "\" y=\"" + num(kTop + 22) +
         "\" width=\"14\" height=\"10\" fill=\"none\" stroke=\"" +
         std::string(kPalette[1]) + "\" stroke-dasharray=\"5,3\"/>\n" +
         text(kLeft + 30, kTop + 31, "worst", "start", 11);
  out += "<line x1=\"" + num(kLeft + 10) + "\" y1=\"" + num(kTop + 45) +
         "\" x2=\"" + num(kLeft + 24) + "\" y2=\"" + num(kTop + 45) +
         "\" stroke=\"" + std::string(kPalette[2]) +
         "\" stroke-width=\"2\"/>\n" +
         text(kLeft + 30, kTop + 49, "percentile", "start", 11);

  out += text(kRight, kHeight - 8, annotation, "end", 10);
  out += "</svg>\n";
  return out;
}

}  // namespace obsbandit::svg
