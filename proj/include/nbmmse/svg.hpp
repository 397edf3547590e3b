// Minimal static SVG line charts (non-normative convenience output).
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nbmmse {

struct ChartSeries {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series);

}  // namespace nbmmse
