// SPDX-License-Identifier: Apache-2.0
#include "xling/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xling/util.hpp"

namespace xling::report {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void write_curve_csv(const metrics::LayerCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write curve csv: " + path);
    out << "tap,value,baseline\n";
    for (size_t i = 0; i < curve.values.size(); ++i) {
        out << i << "," << fmt(curve.values[i]) << ",";
        if (i < curve.baseline.size()) out << fmt(curve.baseline[i]);
        out << "\n";
    }
}

metrics::LayerCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open curve csv: " + path);
    metrics::LayerCurve curve;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto parts = split(line, ',');
        if (parts.size() < 2) throw DataError("curve csv: malformed row in " + path);
        curve.values.push_back(std::stod(parts[1]));
        if (parts.size() > 2 && !trim(parts[2]).empty())
            curve.baseline.push_back(std::stod(parts[2]));
    }
    return curve;
}

void write_svg_chart(const std::string& title, const std::vector<SvgSeries>& series,
                     const std::string& path) {
    const int width = 640, height = 400, margin = 50;
    double lo = 0, hi = 1;
    size_t max_len = 1;
    bool first = true;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) {
            if (first) {
                lo = hi = v;
                first = false;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << title << "</text>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
       << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
       << height - margin << "\" stroke=\"black\"/>\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", hi);
    os << "<text x=\"4\" y=\"" << margin + 4 << "\" font-size=\"11\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.4g", lo);
    os << "<text x=\"4\" y=\"" << height - margin << "\" font-size=\"11\">" << buf
       << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.values.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << palette[si % 6]
           << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.values.size(); ++i) {
            double fx = max_len > 1 ? static_cast<double>(i) / (max_len - 1) : 0.0;
            double fy = (s.values[i] - lo) / (hi - lo);
            double px = margin + fx * (width - 2 * margin);
            double py = height - margin - fy * (height - 2 * margin);
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px, py);
            os << buf;
        }
        os << "\"/>\n";
        os << "<text x=\"" << width - margin + 4 << "\" y=\"" << margin + 16 * si
           << "\" font-size=\"10\" fill=\"" << palette[si % 6] << "\">" << s.name
           << "</text>\n";
    }
    os << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw DataError("cannot write svg: " + path);
    out << os.str();
}

}  // namespace xling::report
