#include "lyapsim/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lyapsim/errors.hpp"
#include "lyapsim/io.hpp"

namespace lyapsim {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                  "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    double pixel_lo = 0.0, pixel_hi = 1.0;

    bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
    double map(double v) const {
        const double a = log ? std::log10(lo) : lo, b = log ? std::log10(hi) : hi;
        const double u = ((log ? std::log10(v) : v) - a) / (b - a);
        return pixel_lo + u * (pixel_hi - pixel_lo);
    }
};

Axis fit_axis(const std::vector<double>& values, bool log, double p_lo, double p_hi) {
    Axis ax;
    ax.log = log;
    ax.pixel_lo = p_lo;
    ax.pixel_hi = p_hi;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (!ax.usable(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
        lo = log ? 1.0 : 0.0;
        hi = log ? 10.0 : 1.0;
    }
    if (log) {
        lo = std::pow(10.0, std::floor(std::log10(lo)));
        hi = std::pow(10.0, std::ceil(std::log10(hi)));
        if (hi <= lo) hi = lo * 10.0;
    } else {
        if (hi <= lo) {
            const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
            lo -= pad;
            hi += pad;
        } else {
            const double pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
    }
    ax.lo = lo;
    ax.hi = hi;
    return ax;
}

std::vector<double> ticks(const Axis& ax) {
    std::vector<double> out;
    if (ax.log) {
        for (double v = ax.lo; v <= ax.hi * (1 + 1e-9); v *= 10.0) out.push_back(v);
        return out;
    }
    const double raw = (ax.hi - ax.lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    for (double v = std::ceil(ax.lo / step) * step; v <= ax.hi + 1e-9 * step; v += step)
        out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string polyline(const Axis& xa, const Axis& ya, const std::vector<double>& x, const std::vector<double>& y) {
    std::string pts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!xa.usable(x[i]) || !ya.usable(y[i])) continue;
        if (!pts.empty()) pts += ' ';
        pts += fmt(xa.map(x[i])) + "," + fmt(ya.map(y[i]));
    }
    return pts;
}

}  // namespace

PlotSeries curve(std::string name, std::vector<double> x, std::vector<double> y) {
    PlotSeries s;
    s.name = std::move(name);
    s.x = std::move(x);
    s.y = std::move(y);
    return s;
}

std::string render_svg(const PlotSpec& spec) {
    if (spec.series.empty()) throw DomainError("plot has no series");
    std::vector<double> xs, ys;
    for (const auto& s : spec.series) {
        if (s.x.size() != s.y.size()) throw DomainError("series '" + s.name + "' has mismatched x/y");
        if (!s.lo.empty() && (s.lo.size() != s.x.size() || s.hi.size() != s.x.size())) {
            throw DomainError("series '" + s.name + "' has a band of the wrong length");
        }
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
        ys.insert(ys.end(), s.lo.begin(), s.lo.end());
        ys.insert(ys.end(), s.hi.begin(), s.hi.end());
    }
    const Axis xa = fit_axis(xs, spec.log_x, kLeft, kWidth - kRight);
    const Axis ya = fit_axis(ys, spec.log_y, kHeight - kBottom, kTop);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" viewBox=\"0 0 720 480\" "
           "font-family=\"DejaVu Sans\" font-size=\"12\">\n";
    svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(spec.title) + "</text>\n";

    for (double t : ticks(xa)) {
        const double px = xa.map(t);
        svg += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(px) + "\" y2=\"" +
               fmt(kHeight - kBottom) + "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" +
               tick_label(t) + "</text>\n";
    }
    for (double t : ticks(ya)) {
        const double py = ya.map(t);
        svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(kWidth - kRight) + "\" y2=\"" +
               fmt(py) + "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(py + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
               "</text>\n";
    }
    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(kWidth - kLeft - kRight) +
           "\" height=\"" + fmt(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt((kLeft + kWidth - kRight) / 2) + "\" y=\"" + fmt(kHeight - 20) +
           "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + fmt((kTop + kHeight - kBottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
           fmt((kTop + kHeight - kBottom) / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

    if (spec.dominance) {
        const auto [a, b] = *spec.dominance;
        if (a >= spec.series.size() || b >= spec.series.size() || spec.series[a].x != spec.series[b].x) {
            throw DomainError("dominance shading needs two series on the same abscissae");
        }
        const auto& sa = spec.series[a];
        const auto& sb = spec.series[b];
        for (std::size_t i = 0; i + 1 < sa.x.size(); ++i) {
            if (!(sa.y[i] >= sb.y[i] && sa.y[i + 1] >= sb.y[i + 1])) continue;
            const std::vector<double> qx = {sa.x[i], sa.x[i + 1], sb.x[i + 1], sb.x[i]};
            const std::vector<double> qy = {sa.y[i], sa.y[i + 1], sb.y[i + 1], sb.y[i]};
            const auto pts = polyline(xa, ya, qx, qy);
            if (!pts.empty()) svg += "<polygon points=\"" + pts + "\" fill=\"#2ca02c\" fill-opacity=\"0.2\"/>\n";
        }
    }

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const std::string color = kPalette[k % kPalette.size()];
        if (!s.lo.empty()) {
            std::vector<double> bx(s.x), by(s.hi);
            bx.insert(bx.end(), s.x.rbegin(), s.x.rend());
            by.insert(by.end(), s.lo.rbegin(), s.lo.rend());
            const auto pts = polyline(xa, ya, bx, by);
            if (!pts.empty()) {
                svg += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
            }
        }
        if (s.line) {
            const auto pts = polyline(xa, ya, s.x, s.y);
            if (!pts.empty()) {
                svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
                       (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
            }
        }
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!xa.usable(s.x[i]) || !ya.usable(s.y[i])) continue;
                svg += "<circle cx=\"" + fmt(xa.map(s.x[i])) + "\" cy=\"" + fmt(ya.map(s.y[i])) + "\" r=\"2.5\" fill=\"" +
                       color + "\"/>\n";
            }
        }
        const double ly = kTop + 10 + 18 * static_cast<double>(k);
        svg += "<line x1=\"" + fmt(kWidth - kRight + 10) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(kWidth - kRight + 30) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
               (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
        svg += "<text x=\"" + fmt(kWidth - kRight + 35) + "\" y=\"" + fmt(ly + 4) + "\">" + escape(s.name) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_plot_csv(const PlotSpec& spec) {
    CsvTable t({"series", "x", "y", "lo", "hi"});
    for (const auto& s : spec.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const bool band = !s.lo.empty();
            t.add_row({s.name, format_number(s.x[i]), format_number(s.y[i]), band ? format_number(s.lo[i]) : "",
                       band ? format_number(s.hi[i]) : ""});
        }
    }
    return t.str();
}

PlotFiles emit_plot_data(const PlotSpec& spec, const std::filesystem::path& stem) {
    PlotFiles files{stem, stem};
    files.svg += ".svg";
    files.csv += ".csv";
    write_text(files.svg, render_svg(spec));
    write_text(files.csv, render_plot_csv(spec));
    return files;
}

}  // namespace lyapsim
