#pragma once

#include "freesde/density.hpp"

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

namespace freesde::cli {

/// Static multi-curve plot: one polyline per density, shared fixed axes.
inline void write_density_svg(std::ostream& out, const std::vector<DensityCurve>& curves, const std::string& title) {
    constexpr double width = 720, height = 440, left = 60, right = 20, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y1 = 1;
    if (!curves.empty()) {
        x0 = curves.front().xs.front();
        x1 = curves.front().xs.back();
        y1 = 0;
        for (const auto& c : curves) {
            x0 = std::min(x0, c.xs.front());
            x1 = std::max(x1, c.xs.back());
            for (double p : c.ps) y1 = std::max(y1, p);
        }
        if (!(y1 > 0)) y1 = 1;
        if (!(x1 > x0)) x1 = x0 + 1;
    }
    y1 *= 1.05;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + ph - y / y1 * ph; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y1 * i / 4.0;
        out << "<text x=\"" << sx(fx) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << format_real(fx).substr(0, 7)
            << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << sy(fy) + 4 << "\" text-anchor=\"end\">" << format_real(fy).substr(0, 6)
            << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">x</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& curve = curves[c];
        const char* colour = palette[c % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < curve.xs.size(); ++i) out << sx(curve.xs[i]) << ',' << sy(curve.ps[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << left + pw - 8 << "\" y=\"" << top + 16 + 15 * static_cast<double>(c)
            << "\" text-anchor=\"end\" fill=\"" << colour << "\">t = " << format_real(curve.t) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace freesde::cli
