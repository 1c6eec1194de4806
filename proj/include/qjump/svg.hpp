#pragma once

// Standalone SVG figures drawn straight from data arrays: line plots (spectra, time series),
// point clouds (phase portraits) and heat maps (drive sweeps). No display or plotting library
// is involved; the CSV files remain the source of truth.

#include <filesystem>
#include <string>
#include <vector>

namespace qjump {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotAxes {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;  // non-positive values are dropped on a log axis
    double x_min = 0.0;  // x_max <= x_min selects the data range
    double x_max = 0.0;
};

std::string svg_line_plot(const PlotAxes& axes, const std::vector<PlotSeries>& series);

std::string svg_scatter(const PlotAxes& axes, const std::vector<double>& x, const std::vector<double>& y);

// rows[i][j] is the value at (x[j], y[i]); drawn as log10 when log_scale. NaN cells are grey.
std::string svg_heatmap(const PlotAxes& axes, const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<std::vector<double>>& rows, bool log_scale);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qjump
