#pragma once

#include <string>
#include <vector>

namespace plr {

struct SvgSeries {
    std::string name;
    std::vector<double> ys;  // one per x position
};

// Minimal self-contained line chart (axes, ticks, legend, one polyline per
// series). Good enough to eyeball sweep trends; not a plotting library.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<double>& xs,
                           const std::vector<SvgSeries>& series);

}  // namespace plr
