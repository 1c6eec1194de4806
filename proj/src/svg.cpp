#include "qjump/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qjump/errors.hpp"

namespace qjump {

namespace {

constexpr double kWidth = 720.0, kHeight = 440.0;
constexpr double kLeft = 80.0, kRight = 30.0, kTop = 40.0, kBottom = 55.0;
constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double x, const char* spec = "%.4g") {
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(hi >= lo)) lo = 0.0, hi = 1.0;
        if (hi == lo) lo -= 0.5, hi += 0.5;
    }
};

// Maps data coordinates into the plotting frame.
struct Frame {
    Range x, y;
    double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
    double py(double v) const { return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom); }
};

void open_svg(std::ostringstream& s, const PlotAxes& axes) {
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title)
      << "</text>\n";
}

void draw_axes(std::ostringstream& s, const Frame& f, const PlotAxes& axes) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    s << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = f.x.lo + (f.x.hi - f.x.lo) * i / 5.0;
        const double yv = f.y.lo + (f.y.hi - f.y.lo) * i / 5.0;
        s << "<text x=\"" << f.px(xv) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << fmt(xv)
          << "</text>\n";
        const std::string label = axes.log_y ? "1e" + fmt(yv, "%.1f") : fmt(yv);
        s << "<text x=\"" << x0 - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    s << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(axes.x_label) << "</text>\n";
    s << "<text transform=\"translate(18," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(axes.y_label) << "</text>\n";
}

bool in_x(const PlotAxes& axes, double x) { return axes.x_max <= axes.x_min || (x >= axes.x_min && x <= axes.x_max); }

}  // namespace

std::string svg_line_plot(const PlotAxes& axes, const std::vector<PlotSeries>& series) {
    Frame f;
    const auto yval = [&](double v) { return axes.log_y ? (v > 0.0 ? std::log10(v) : NAN) : v; };
    for (const auto& ser : series) {
        if (ser.x.size() != ser.y.size()) throw DimensionMismatch("plot series x and y differ in length");
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            if (!in_x(axes, ser.x[i])) continue;
            f.x.add(ser.x[i]);
            f.y.add(yval(ser.y[i]));
        }
    }
    if (axes.x_max > axes.x_min) f.x = {axes.x_min, axes.x_max};
    f.x.settle();
    f.y.settle();

    std::ostringstream s;
    open_svg(s, axes);
    draw_axes(s, f, axes);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& ser = series[k];
        const char* colour = kColours[k % std::size(kColours)];
        s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            const double y = yval(ser.y[i]);
            if (!in_x(axes, ser.x[i]) || !std::isfinite(y)) continue;
            s << fmt(f.px(ser.x[i]), "%.2f") << ',' << fmt(f.py(y), "%.2f") << ' ';
        }
        s << "\"/>\n";
        if (!ser.label.empty()) {
            s << "<text x=\"" << kWidth - kRight - 8 << "\" y=\"" << kTop + 16 + 16 * k
              << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(ser.label) << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

std::string svg_scatter(const PlotAxes& axes, const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionMismatch("scatter x and y differ in length");
    Frame f;
    for (std::size_t i = 0; i < x.size(); ++i) {
        f.x.add(x[i]);
        f.y.add(y[i]);
    }
    f.x.settle();
    f.y.settle();
    std::ostringstream s;
    PlotAxes linear = axes;
    linear.log_y = false;
    open_svg(s, linear);
    draw_axes(s, f, linear);
    s << "<g fill=\"" << kColours[0] << "\" fill-opacity=\"0.5\">\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        s << "<circle cx=\"" << fmt(f.px(x[i]), "%.2f") << "\" cy=\"" << fmt(f.py(y[i]), "%.2f") << "\" r=\"0.8\"/>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

std::string svg_heatmap(const PlotAxes& axes, const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<std::vector<double>>& rows, bool log_scale) {
    if (rows.size() != y.size()) throw DimensionMismatch("heat map needs one row per y value");
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (in_x(axes, x[j])) cols.push_back(j);
    }
    if (cols.empty() || y.empty()) throw InvalidArgument("heat map has no cells in range");
    const auto value = [&](double v) { return log_scale ? (v > 0.0 ? std::log10(v) : NAN) : v; };
    Range z;
    for (const auto& row : rows) {
        if (row.size() != x.size()) throw DimensionMismatch("heat map row length differs from x");
        for (const std::size_t j : cols) z.add(value(row[j]));
    }
    z.settle();

    Frame f;
    f.x = {x[cols.front()], x[cols.back()]};
    f.y = {y.front(), y.back()};
    f.x.settle();
    f.y.settle();
    PlotAxes linear = axes;
    linear.log_y = false;
    std::ostringstream s;
    open_svg(s, linear);
    const double cell_w = (kWidth - kLeft - kRight) / static_cast<double>(cols.size());
    const double cell_h = (kHeight - kTop - kBottom) / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double top = kHeight - kBottom - cell_h * static_cast<double>(i + 1);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double v = value(rows[i][cols[c]]);
            std::string colour = "#bbbbbb";
            if (std::isfinite(v)) {
                // Dark blue through yellow, linear in the (log) value.
                const double u = std::clamp((v - z.lo) / (z.hi - z.lo), 0.0, 1.0);
                const int r = static_cast<int>(255 * std::min(1.0, 2.0 * u));
                const int g = static_cast<int>(255 * u);
                const int b = static_cast<int>(255 * (1.0 - u) * 0.6);
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
                colour = buf;
            }
            s << "<rect x=\"" << fmt(kLeft + cell_w * static_cast<double>(c), "%.2f") << "\" y=\""
              << fmt(top, "%.2f") << "\" width=\"" << fmt(cell_w + 0.05, "%.2f") << "\" height=\""
              << fmt(cell_h + 0.05, "%.2f") << "\" fill=\"" << colour << "\"/>\n";
        }
    }
    draw_axes(s, f, linear);
    s << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop - 8 << "\" text-anchor=\"end\">"
      << (log_scale ? "log10 " : "") << "range " << fmt(z.lo) << " .. " << fmt(z.hi) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw NumericalError("write to '" + path.string() + "' failed");
}

}  // namespace qjump
