#pragma once

#include <string>
#include <vector>

namespace steamnet::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool step = false;   ///< draw as a zero-order-hold staircase
    bool dashed = false;
};

/// A stacked band between the running sum of previous bands and this one.
struct Band {
    std::string name;
    std::vector<double> y;
    std::string color;
};

struct Panel {
    std::string title;
    std::string y_label;
    std::vector<Series> series;
    std::vector<Band> bands; ///< stacked over the shared x of the chart
    std::vector<double> band_x;
};

struct Chart {
    std::string title;
    std::string x_label = "time [s]";
    std::vector<Panel> panels;
    int width = 900;
    int panel_height = 260;
};

/// Self-contained SVG document; panels are stacked vertically and share the x range.
std::string render(const Chart& chart);

/// Categorical palette (cycled).
std::string palette(std::size_t i);

} // namespace steamnet::svg
