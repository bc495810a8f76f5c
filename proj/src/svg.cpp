#include "plr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plr/errors.hpp"
#include "plr/format.hpp"

namespace plr {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf"};

std::string fmt(double x) { return format_sig(x, 6); }

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<double>& xs,
                           const std::vector<SvgSeries>& series) {
    if (xs.empty()) throw PreconditionError("line_chart_svg: no x values");
    for (const auto& s : series)
        if (s.ys.size() != xs.size())
            throw DimensionError("line_chart_svg: series '" + s.name +
                                 "' length does not match xs");

    double xmin = xs.front(), xmax = xs.front();
    for (double x : xs) { xmin = std::min(xmin, x); xmax = std::max(xmax, x); }
    double ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& s : series)
        for (double y : s.ys) {
            if (first) { ymin = ymax = y; first = false; }
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
    if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    const auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
        << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

    // Axes.
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
        << kLeft + plot_w << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // Min/max tick labels plus axis names.
    out << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 28
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(xmin) << "</text>\n";
    out << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kHeight - 28
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(xmax) << "</text>\n";
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << x_label << "</text>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(ymin)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(ymin) << "</text>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(ymax)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(ymax) << "</text>\n";
    out << "<text x=\"16\" y=\"" << kTop - 12
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i > 0) out << ' ';
            out << fmt(px(xs[i])) << ',' << fmt(py(series[s].ys[i]));
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            out << "<circle cx=\"" << fmt(px(xs[i])) << "\" cy=\"" << fmt(py(series[s].ys[i]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        // Legend row.
        const double ly = kTop + 14.0 * static_cast<double>(s);
        out << "<rect x=\"" << kLeft + plot_w - 150 << "\" y=\"" << ly
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << kLeft + plot_w - 136 << "\" y=\"" << ly + 9
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].name
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace plr
