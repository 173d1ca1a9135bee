#pragma once

// Minimal deterministic SVG emission: line charts for the normalized
// regret series and grouped bars for the final-round summary. Byte-stable
// output for identical input is part of the contract, so all coordinates
// are formatted with fixed precision and no external toolchain is used.

#include <string>
#include <vector>

namespace obsbandit::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  int color_index = 0;
};

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<Series>& series,
                       const std::string& annotation);

struct BarGroup {
  std::string label;
  double mean = 0.0;
  double worst = 0.0;
  double percentile = 0.0;
};

std::string bar_chart(const std::string& title, const std::string& y_label,
                      const std::vector<BarGroup>& groups,
                      const std::string& annotation);

}  // namespace obsbandit::svg
