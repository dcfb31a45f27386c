#include "mapcull/svgplot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mapcull/types.hpp"

namespace mapcull {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotSeries>& series, const std::string& comment) {
    if (series.empty()) throw UsageError("write_svg_lines: no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw UsageError("write_svg_lines: bad series '" + s.label + "'");
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ofstream out(path);
    if (!out) throw DataError("write_svg_lines: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!comment.empty()) out << "<!-- " << comment << " -->\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";

    // axes
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
        << H - B << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << H - B << "\" x2=\"" << px(xv)
            << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18
            << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
        out << "<line x1=\"" << L - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << L << "\" y2=\""
            << py(yv) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << L - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
        << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    out << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\""
        << "rotate(-90 18 " << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kColors[si % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < series[si].x.size(); ++i)
            out << num(px(series[si].x[i])) << "," << num(py(series[si].y[i])) << " ";
        out << "\"/>\n";
        const double ly = T + 14.0 * (si + 1);
        out << "<line x1=\"" << W - R - 130 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 110
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - R - 105 << "\" y=\"" << ly + 4 << "\">" << series[si].label
            << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace mapcull
