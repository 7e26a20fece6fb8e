#pragma once
// Dependency-free SVG emission: class-colored scatter plots, value-mapped
// heatmaps with data overlays, and line charts. Output is deterministic
// (fixed canvas, %.6g coordinates) so rerenders are byte-identical.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/format.hpp"

namespace ldu {

namespace svg_detail {

inline constexpr double kWidth = 520.0;
inline constexpr double kHeight = 440.0;
inline constexpr double kMargin = 48.0;

inline const char* class_color(std::size_t label) {
    static const char* palette[] = {"#d9534f", "#2e6da4", "#5cb85c", "#f0ad4e",
                                    "#7b5ea7", "#46b8b0", "#b86c46", "#8a8a8a"};
    return palette[label % 8];
}

struct Range {
    double lo{0.0}, hi{1.0};
    double map(double v, double out_lo, double out_hi) const {
        const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        return out_lo + t * (out_hi - out_lo);
    }
};

inline Range padded_range(double lo, double hi) {
    if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

// two-color lerp, dark blue (low) to warm yellow (high)
inline std::string value_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(44.0 + t * (255.0 - 44.0)));
    const int g = static_cast<int>(std::lround(62.0 + t * (210.0 - 62.0)));
    const int b = static_cast<int>(std::lround(144.0 + t * (77.0 - 144.0)));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

class Canvas {
  public:
    explicit Canvas(const std::string& path) : out_(path), path_(path) {
        if (!out_) throw std::runtime_error("svg: cannot open " + path);
        out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
             << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
             << "\">\n"
             << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" fill=\"#ffffff\"/>\n";
    }

    void title(const std::string& text) {
        out_ << "<text x=\"" << kWidth / 2.0
             << "\" y=\"20\" font-family=\"monospace\" font-size=\"14\" "
                "text-anchor=\"middle\">"
             << text << "</text>\n";
    }

    void frame(const Range& x, const Range& y) {
        out_ << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
             << kWidth - 2.0 * kMargin << "\" height=\"" << kHeight - 2.0 * kMargin
             << "\" fill=\"none\" stroke=\"#444444\"/>\n";
        label(kMargin, kHeight - kMargin + 16.0, fmt6(x.lo), "start");
        label(kWidth - kMargin, kHeight - kMargin + 16.0, fmt6(x.hi), "end");
        label(kMargin - 4.0, kHeight - kMargin, fmt6(y.lo), "end");
        label(kMargin - 4.0, kMargin + 10.0, fmt6(y.hi), "end");
    }

    void label(double x, double y, const std::string& text, const char* anchor) {
        out_ << "<text x=\"" << fmt6(x) << "\" y=\"" << fmt6(y)
             << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"" << anchor
             << "\">" << text << "</text>\n";
    }

    void circle(double x, double y, double r, const std::string& fill) {
        out_ << "<circle cx=\"" << fmt6(x) << "\" cy=\"" << fmt6(y) << "\" r=\"" << fmt6(r)
             << "\" fill=\"" << fill << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        out_ << "<rect x=\"" << fmt6(x) << "\" y=\"" << fmt6(y) << "\" width=\"" << fmt6(w)
             << "\" height=\"" << fmt6(h) << "\" fill=\"" << fill << "\"/>\n";
    }

    void polyline(const std::vector<double>& pts, const std::string& stroke) {
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" "
                "points=\"";
        for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
            if (i) out_ << ' ';
            out_ << fmt6(pts[i]) << ',' << fmt6(pts[i + 1]);
        }
        out_ << "\"/>\n";
    }

    double plot_x(const Range& r, double v) const { return r.map(v, kMargin, kWidth - kMargin); }
    double plot_y(const Range& r, double v) const { return r.map(v, kHeight - kMargin, kMargin); }

    void finish() {
        out_ << "</svg>\n";
        if (!out_) throw std::runtime_error("svg: write failed for " + path_);
    }

  private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace svg_detail

// One marker per row of the n x 2 point buffer, colored by class label.
inline void write_scatter_svg(const std::string& path, const std::vector<double>& points,
                              const std::vector<std::size_t>& labels, const std::string& title) {
    const std::size_t n = labels.size();
    if (points.size() != n * 2 || n == 0)
        throw std::runtime_error("write_scatter_svg: points must be a nonempty n x 2 buffer");
    double x_lo = points[0], x_hi = points[0], y_lo = points[1], y_hi = points[1];
    for (std::size_t i = 0; i < n; ++i) {
        x_lo = std::min(x_lo, points[i * 2]);
        x_hi = std::max(x_hi, points[i * 2]);
        y_lo = std::min(y_lo, points[i * 2 + 1]);
        y_hi = std::max(y_hi, points[i * 2 + 1]);
    }
    const auto rx = svg_detail::padded_range(x_lo, x_hi);
    const auto ry = svg_detail::padded_range(y_lo, y_hi);
    svg_detail::Canvas canvas(path);
    canvas.title(title);
    canvas.frame(rx, ry);
    for (std::size_t i = 0; i < n; ++i)
        canvas.circle(canvas.plot_x(rx, points[i * 2]), canvas.plot_y(ry, points[i * 2 + 1]),
                      3.0, svg_detail::class_color(labels[i]));
    canvas.finish();
}

// resolution x resolution heatmap over [x_lo,x_hi] x [y_lo,y_hi], value
// mapped to color, with optional class-colored data points on top.
inline void write_heatmap_svg(const std::string& path, const std::vector<double>& values,
                              std::size_t resolution, double x_lo, double x_hi, double y_lo,
                              double y_hi, const std::vector<double>& overlay_points,
                              const std::vector<std::size_t>& overlay_labels,
                              const std::string& title) {
    if (values.size() != resolution * resolution || resolution < 2)
        throw std::runtime_error("write_heatmap_svg: values must be resolution^2 with "
                                 "resolution >= 2");
    if (overlay_points.size() != overlay_labels.size() * 2)
        throw std::runtime_error("write_heatmap_svg: overlay points must be n x 2");
    double v_lo = values[0], v_hi = values[0];
    for (double v : values) {
        v_lo = std::min(v_lo, v);
        v_hi = std::max(v_hi, v);
    }
    const svg_detail::Range rx{x_lo, x_hi}, ry{y_lo, y_hi};
    svg_detail::Canvas canvas(path);
    canvas.title(title);
    const double cell_w =
        (svg_detail::kWidth - 2.0 * svg_detail::kMargin) / static_cast<double>(resolution);
    const double cell_h =
        (svg_detail::kHeight - 2.0 * svg_detail::kMargin) / static_cast<double>(resolution);
    for (std::size_t yi = 0; yi < resolution; ++yi)
        for (std::size_t xi = 0; xi < resolution; ++xi) {
            const double v = values[yi * resolution + xi];
            const double t = v_hi > v_lo ? (v - v_lo) / (v_hi - v_lo) : 0.5;
            // grid rows run bottom-up; SVG y runs top-down
            canvas.rect(svg_detail::kMargin + cell_w * static_cast<double>(xi),
                        svg_detail::kHeight - svg_detail::kMargin -
                            cell_h * static_cast<double>(yi + 1),
                        cell_w, cell_h, svg_detail::value_color(t));
        }
    canvas.frame(rx, ry);
    for (std::size_t i = 0; i < overlay_labels.size(); ++i)
        canvas.circle(canvas.plot_x(rx, overlay_points[i * 2]),
                      canvas.plot_y(ry, overlay_points[i * 2 + 1]), 2.0,
                      svg_detail::class_color(overlay_labels[i]));
    canvas.finish();
}

// Single series over an integer x axis (epochs/steps).
inline void write_line_chart_svg(const std::string& path, const std::vector<double>& values,
                                 const std::string& title) {
    if (values.empty()) throw std::runtime_error("write_line_chart_svg: empty series");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const auto ry = svg_detail::padded_range(lo, hi);
    const svg_detail::Range rx{0.0, static_cast<double>(values.size() - 1)};
    svg_detail::Canvas canvas(path);
    canvas.title(title);
    canvas.frame(rx, ry);
    std::vector<double> pts;
    pts.reserve(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        pts.push_back(canvas.plot_x(rx, static_cast<double>(i)));
        pts.push_back(canvas.plot_y(ry, values[i]));
    }
    if (values.size() == 1) {
        canvas.circle(pts[0], pts[1], 3.0, "#2e6da4");
    } else {
        canvas.polyline(pts, "#2e6da4");
    }
    canvas.finish();
}

}  // namespace ldu
