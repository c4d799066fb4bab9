// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "xling/metrics/metrics.hpp"

namespace xling::report {

// "tap,value,baseline" rows; baseline column empty when the curve has none.
void write_curve_csv(const metrics::LayerCurve& curve, const std::string& path);
metrics::LayerCurve read_curve_csv(const std::string& path);

struct SvgSeries {
    std::string name;
    std::vector<double> values;
};

// Deterministic standalone SVG line chart, one polyline per series.
void write_svg_chart(const std::string& title, const std::vector<SvgSeries>& series,
                     const std::string& path);

}  // namespace xling::report
