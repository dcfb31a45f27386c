#pragma once

#include <string>
#include <vector>

namespace mapcull {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal diffable SVG line chart: axes, ticks, polylines, legend.
// `comment` is embedded verbatim as an XML comment (provenance stamp).
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotSeries>& series, const std::string& comment = "");

}  // namespace mapcull
