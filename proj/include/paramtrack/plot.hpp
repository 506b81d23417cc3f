#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace paramtrack {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr; // optional error bars, same length as y
};

/// Data for one rendered figure. Line/overlay plots use `series`; bar charts
/// use groups x bar_series with `bar_values`.
struct PlotTable {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string provenance; // embedded as an SVG comment
    std::vector<PlotSeries> series;
    std::vector<std::string> groups;
    std::vector<std::string> bar_series;
    Eigen::MatrixXd bar_values;
};

enum class PlotKind { Line, Bar, Overlay };

/// Self-contained SVG with axes, ticks and a legend. Raises ConfigError on
/// empty input before touching the filesystem.
void render_plot(const PlotTable& table, PlotKind kind, const std::filesystem::path& path);

} // namespace paramtrack
