#pragma once

#include <optional>
#include <string>
#include <vector>

#include "synsim/numerics.hpp"

namespace synsim::cli {

struct Series {
    std::string label;
    Vector x;
    Vector y;
    std::string color;
    bool dashed = false;
    bool markers_only = false;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::optional<double> hline;  // horizontal reference, drawn dotted
    std::string hline_label;
};

/// Standalone SVG document (well-formed XML, text escaped).
std::string render_svg(const Plot& plot, int width = 720, int height = 440);

std::string xml_escape(const std::string& text);

/// Distinct colors for series index k.
std::string palette(std::size_t k);

}  // namespace synsim::cli
