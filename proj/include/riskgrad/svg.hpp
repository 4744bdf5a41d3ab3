#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace riskgrad {

/// Minimal SVG line chart: polylines over a shared axis box with min/max
/// tick labels. Presentation only; nothing here feeds back into estimates.
struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    std::string label;
};

inline std::string render_svg_chart(const std::vector<SvgSeries>& series, const std::string& title) {
    constexpr double width = 800, height = 500;
    constexpr double left = 70, right = 20, top = 40, bottom = 50;

    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;

    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double y) { return top + (y_max - y) / (y_max - y_min) * plot_h; };

    std::ostringstream out;
    out.precision(10);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";

    auto fmt = [](double v) {
        std::ostringstream s;
        s.precision(6);
        s << v;
        return s.str();
    };
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(y_min) << "\" text-anchor=\"end\" font-size=\"11\">"
        << fmt(y_min) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(y_max) + 10 << "\" text-anchor=\"end\" font-size=\"11\">"
        << fmt(y_max) << "</text>\n";
    out << "<text x=\"" << sx(x_min) << "\" y=\"" << height - bottom + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(x_min) << "</text>\n";
    out << "<text x=\"" << sx(x_max) << "\" y=\"" << height - bottom + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(x_max) << "</text>\n";

    double legend_y = top + 14;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        if (!s.label.empty()) {
            out << "<text x=\"" << width - right - 4 << "\" y=\"" << legend_y
                << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << s.color << "\">" << s.label
                << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace riskgrad
