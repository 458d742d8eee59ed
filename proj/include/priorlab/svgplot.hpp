#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "priorlab/csvfmt.hpp"
#include "priorlab/errors.hpp"

namespace priorlab {

// Minimal self-contained SVG line chart: mean curve with a +-1 std band,
// one series per task, metric vs k. No plotting dependency, deterministic
// output bytes.

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;
};

namespace detail {

inline const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                      "#ff7f0e", "#8c564b"};

inline std::string svg_poly(const std::vector<std::pair<double, double>>& pts,
                            const std::string& attrs, bool closed) {
    std::string s = closed ? "<polygon points=\"" : "<polyline points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ' ';
        s += format_double(pts[i].first);
        s += ',';
        s += format_double(pts[i].second);
    }
    s += "\" " + attrs + "/>\n";
    return s;
}

}  // namespace detail

inline std::string render_svg_chart(const std::vector<PlotSeries>& series,
                                    const std::string& x_label, const std::string& y_label,
                                    const std::string& title) {
    if (series.empty()) throw InvalidArgument("render_svg_chart: no series");
    const double width = 720, height = 480;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const PlotSeries& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.mean[i] - s.stddev[i]);
            ymax = std::max(ymax, s.mean[i] + s.stddev[i]);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
           "\" height=\"" + format_double(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + format_double(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";

    // Axes.
    svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(height - mb) +
           "\" x2=\"" + format_double(width - mr) + "\" y2=\"" + format_double(height - mb) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(mt) + "\" x2=\"" +
           format_double(ml) + "\" y2=\"" + format_double(height - mb) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + format_double(width / 2) + "\" y=\"" + format_double(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + x_label +
           "</text>\n";
    svg += "<text x=\"18\" y=\"" + format_double(height / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " + format_double(height / 2) + ")\">" + y_label +
           "</text>\n";

    // Tick labels at the extremes.
    svg += "<text x=\"" + format_double(ml) + "\" y=\"" + format_double(height - mb + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_double(xmin) + "</text>\n";
    svg += "<text x=\"" + format_double(width - mr) + "\" y=\"" +
           format_double(height - mb + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_double(xmax) + "</text>\n";
    svg += "<text x=\"" + format_double(ml - 6) + "\" y=\"" + format_double(py(ymin) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_double(ymin) + "</text>\n";
    svg += "<text x=\"" + format_double(ml - 6) + "\" y=\"" + format_double(py(ymax) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_double(ymax) + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const PlotSeries& s = series[si];
        const std::string color = detail::kSeriesColors[si % 6];

        std::vector<std::pair<double, double>> band;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            band.emplace_back(px(s.x[i]), py(s.mean[i] + s.stddev[i]));
        }
        for (std::size_t i = s.x.size(); i-- > 0;) {
            band.emplace_back(px(s.x[i]), py(s.mean[i] - s.stddev[i]));
        }
        svg += detail::svg_poly(band, "fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\"",
                                true);

        std::vector<std::pair<double, double>> line;
        for (std::size_t i = 0; i < s.x.size(); ++i) line.emplace_back(px(s.x[i]), py(s.mean[i]));
        svg += detail::svg_poly(line, "fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"",
                                false);

        svg += "<text x=\"" + format_double(width - mr - 8) + "\" y=\"" +
               format_double(mt + 16.0 * static_cast<double>(si + 1)) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
               color + "\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

// Aggregates sweep records into per-(task, k) mean and std of one metric
// column ("mse", "psnr_db" or "residual") and renders the chart.
inline std::string svg_from_records_csv(const std::string& csv_text, const std::string& metric,
                                        const std::string& title) {
    CsvTable t = parse_csv(csv_text);
    std::size_t col_task = t.column("task");
    std::size_t col_k = t.column("k");
    std::size_t col_m = t.column(metric);

    // task -> k -> values, keyed in sorted order for deterministic output.
    std::map<std::string, std::map<double, std::vector<double>>> grouped;
    for (const auto& row : t.rows) {
        grouped[row[col_task]][std::stod(row[col_k])].push_back(std::stod(row[col_m]));
    }
    std::vector<PlotSeries> series;
    for (const auto& [task, by_k] : grouped) {
        PlotSeries s;
        s.label = task;
        for (const auto& [k, vals] : by_k) {
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            var = vals.size() > 1 ? var / static_cast<double>(vals.size() - 1) : 0.0;
            s.x.push_back(k);
            s.mean.push_back(mean);
            s.stddev.push_back(std::sqrt(var));
        }
        series.push_back(std::move(s));
    }
    return render_svg_chart(series, "k", metric, title);
}

}  // namespace priorlab
