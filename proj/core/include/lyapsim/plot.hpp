#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lyapsim {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    /// Confidence band; empty vectors render points without a band.
    std::vector<double> lo;
    std::vector<double> hi;
    bool line = true;     ///< polyline through the points
    bool markers = true;
    bool dashed = false;  ///< oracle overlays
};

/// Plain series without a band.
PlotSeries curve(std::string name, std::vector<double> x, std::vector<double> y);

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<PlotSeries> series;
    /// Shade where series[first] >= series[second] (they must share x).
    std::optional<std::pair<std::size_t, std::size_t>> dominance;
};

struct PlotFiles {
    std::filesystem::path svg;
    std::filesystem::path csv;
};

/// SVG text for `spec`: 720x480 canvas, text in a declared font family,
/// coordinates rounded to 0.01 so identical input gives identical bytes.
std::string render_svg(const PlotSpec& spec);
/// Long-format sidecar: series,x,y,lo,hi.
std::string render_plot_csv(const PlotSpec& spec);
/// Writes `<stem>.svg` and `<stem>.csv`.
PlotFiles emit_plot_data(const PlotSpec& spec, const std::filesystem::path& stem);

}  // namespace lyapsim
