#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cgb/config.hpp"
#include "cgb/environment.hpp"

namespace cgb {

struct PlotSeries {
    std::string label;
    std::vector<AggregateRow> rows;
};

// Label from a path: file name without directories and extension.
inline std::string series_label(const std::string& path) {
    auto name = path.substr(path.find_last_of("/\\") == std::string::npos ? 0 : path.find_last_of("/\\") + 1);
    if (const auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) name.erase(dot);
    return name;
}

// Mean cumulative regret per series with a shaded +-1 std band. Output is a
// pure function of the input.
inline std::string render_svg(const std::vector<PlotSeries>& series) {
    static constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                        "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    constexpr double W = 720, H = 440, left = 70, right = 170, top = 20, bottom = 50;
    double tmin = INFINITY, tmax = -INFINITY, ymin = 0.0, ymax = -INFINITY;
    for (const auto& s : series)
        for (const auto& r : s.rows) {
            tmin = std::min(tmin, static_cast<double>(r.t));
            tmax = std::max(tmax, static_cast<double>(r.t));
            ymin = std::min(ymin, r.mean_cum_regret - r.std_cum_regret);
            ymax = std::max(ymax, r.mean_cum_regret + r.std_cum_regret);
        }
    if (!(tmax > tmin)) tmax = tmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const auto px = [&](double t) { return left + (t - tmin) / (tmax - tmin) * (W - left - right); };
    const auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };
    const auto num = [](double v) { return detail::format_double(std::round(v * 100.0) / 100.0); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
      << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double t = tmin + (tmax - tmin) * i / 4.0;
        const double y = ymin + (ymax - ymin) * i / 4.0;
        o << "<text x=\"" << num(px(t)) << "\" y=\"" << H - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
          << num(t) << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << num(py(y) + 4) << "\" font-size=\"11\" text-anchor=\"end\">" << num(y)
          << "</text>\n";
    }
    o << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">t</text>\n";
    o << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (top + H - bottom) / 2 << ")\">cumulative regret</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % kColors.size()];
        o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (const auto& r : s.rows) o << num(px(static_cast<double>(r.t))) << ',' << num(py(r.mean_cum_regret + r.std_cum_regret)) << ' ';
        for (auto it = s.rows.rbegin(); it != s.rows.rend(); ++it)
            o << num(px(static_cast<double>(it->t))) << ',' << num(py(it->mean_cum_regret - it->std_cum_regret)) << ' ';
        o << "\"/>\n";
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : s.rows) o << num(px(static_cast<double>(r.t))) << ',' << num(py(r.mean_cum_regret)) << ' ';
        o << "\"/>\n";
        const double ly = top + 16.0 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 32 << "\" y2=\"" << ly << "\" stroke=\""
          << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - right + 38 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace cgb
