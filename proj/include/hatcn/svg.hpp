#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "hatcn/cross_validate.hpp"
#include "hatcn/errors.hpp"
#include "hatcn/explain.hpp"

// Small self-contained SVG plot emitter. No text shaping, no styling system:
// fixed margins, two font sizes, and data mapped linearly into a plot box.

namespace hatcn::svg {

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

// Linear data-to-pixel mapping into a margin-inset plot box. SVG y grows
// downward, so the y map is flipped.
struct PlotBox {
    double width = 800.0, height = 400.0;
    double left = 60.0, right = 20.0, top = 20.0, bottom = 40.0;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double px(double x) const {
        return left + (x - x0) / (x1 - x0) * (width - left - right);
    }
    double py(double y) const {
        return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom);
    }
};

class Canvas {
public:
    explicit Canvas(double width, double height) : width_(width), height_(height) {}

    void rect(double x, double y, double w, double h, const std::string& fill,
              double opacity = 1.0) {
        body_ += "<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(y) + "\" width=\"" +
                 detail::num(w) + "\" height=\"" + detail::num(h) + "\" fill=\"" + fill +
                 "\" fill-opacity=\"" + detail::num(opacity) + "\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double w = 1.0) {
        body_ += "<line x1=\"" + detail::num(x1) + "\" y1=\"" + detail::num(y1) + "\" x2=\"" +
                 detail::num(x2) + "\" y2=\"" + detail::num(y2) + "\" stroke=\"" + stroke +
                 "\" stroke-width=\"" + detail::num(w) + "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double w = 1.5) {
        if (pts.empty()) return;
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                 detail::num(w) + "\" points=\"";
        for (const auto& [x, y] : pts)
            body_ += detail::num(x) + "," + detail::num(y) + " ";
        body_ += "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill) {
        body_ += "<circle cx=\"" + detail::num(x) + "\" cy=\"" + detail::num(y) + "\" r=\"" +
                 detail::num(r) + "\" fill=\"" + fill + "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 12.0,
              const std::string& anchor = "start") {
        body_ += "<text x=\"" + detail::num(x) + "\" y=\"" + detail::num(y) +
                 "\" font-family=\"sans-serif\" font-size=\"" + detail::num(size) +
                 "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
    }

    // Plot frame with min/max tick labels on both axes.
    void axes(const PlotBox& box, const std::string& xlabel, const std::string& ylabel) {
        line(box.left, box.height - box.bottom, box.width - box.right,
             box.height - box.bottom, "black");
        line(box.left, box.top, box.left, box.height - box.bottom, "black");
        text(box.left, box.height - box.bottom + 16, detail::num(box.x0), 11);
        text(box.width - box.right, box.height - box.bottom + 16, detail::num(box.x1), 11,
             "end");
        text(box.left - 6, box.height - box.bottom, detail::num(box.y0), 11, "end");
        text(box.left - 6, box.top + 10, detail::num(box.y1), 11, "end");
        text((box.left + box.width - box.right) / 2, box.height - 8, xlabel, 12, "middle");
        text(12, box.top - 6, ylabel, 12);
    }

    std::string str() const {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width_) +
               "\" height=\"" + detail::num(height_) + "\" viewBox=\"0 0 " +
               detail::num(width_) + " " + detail::num(height_) + "\">\n" +
               "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
    }

private:
    double width_, height_;
    std::string body_;
};

namespace detail {

inline std::pair<double, double> min_max(const std::vector<double>& v) {
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double lo = *mn, hi = *mx;
    if (hi == lo) hi = lo + 1.0;  // avoid a zero-height plot box
    return {lo, hi};
}

inline std::vector<std::pair<double, double>> curve_points(const PlotBox& box,
                                                           const std::vector<double>& v) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(v.size());
    for (std::size_t t = 0; t < v.size(); ++t)
        pts.emplace_back(box.px(static_cast<double>(t)), box.py(v[t]));
    return pts;
}

}  // namespace detail

// One series with its relevance overlay: shaded extracted segments behind the
// signal, the frequency curve rescaled onto the same box.
inline std::string series_explanation(const std::vector<double>& x,
                                      const RelevanceProfile& profile,
                                      const std::string& title) {
    if (x.empty()) throw UsageError("svg: empty series");
    Canvas c(800, 400);
    PlotBox box;
    box.x1 = static_cast<double>(x.size() - 1);
    std::tie(box.y0, box.y1) = detail::min_max(x);

    for (const auto& seg : profile.segments)
        c.rect(box.px(static_cast<double>(seg.begin)), box.top,
               box.px(static_cast<double>(seg.end)) - box.px(static_cast<double>(seg.begin)) +
                   1.0,
               box.height - box.top - box.bottom, "#fa8072", 0.3);

    c.polyline(detail::curve_points(box, x), "#1f77b4");

    // frequency rescaled to the signal's box so both read on one time axis
    const double peak = static_cast<double>(
        *std::max_element(profile.freq.begin(), profile.freq.end()));
    if (peak > 0.0) {
        std::vector<double> scaled(profile.freq.size());
        for (std::size_t t = 0; t < scaled.size(); ++t)
            scaled[t] = box.y0 + (box.y1 - box.y0) *
                                     (static_cast<double>(profile.freq[t]) / peak);
        c.polyline(detail::curve_points(box, scaled), "#d62728");
    }

    c.axes(box, "time step", title);
    c.text(box.width - box.right, box.top + 12, "signal", 11, "end");
    c.text(box.width - box.right, box.top + 26, "relevance freq (scaled)", 11, "end");
    return c.str();
}

// Class-averaged relevance frequency, one curve per class.
inline std::string class_mean_freq(const std::vector<double>& patient_mean,
                                   const std::vector<double>& healthy_mean) {
    if (patient_mean.empty() || patient_mean.size() != healthy_mean.size())
        throw UsageError("svg: class mean curves must be non-empty and equal length");
    Canvas c(800, 400);
    PlotBox box;
    box.x1 = static_cast<double>(patient_mean.size() - 1);
    auto [plo, phi] = detail::min_max(patient_mean);
    auto [hlo, hhi] = detail::min_max(healthy_mean);
    box.y0 = std::min(plo, hlo);
    box.y1 = std::max(phi, hhi);

    c.polyline(detail::curve_points(box, patient_mean), "#d62728");
    c.polyline(detail::curve_points(box, healthy_mean), "#2ca02c");
    c.axes(box, "time step", "mean relevance frequency");
    c.text(box.width - box.right, box.top + 12, "patient", 11, "end");
    c.text(box.width - box.right, box.top + 26, "healthy", 11, "end");
    return c.str();
}

// Mean accuracy against network depth for both variants, with point markers.
inline std::string depth_accuracy(const std::vector<DepthResult>& sweep) {
    if (sweep.empty()) throw UsageError("svg: empty depth sweep");
    Canvas c(800, 400);
    PlotBox box;
    box.x0 = static_cast<double>(sweep.front().layers);
    box.x1 = static_cast<double>(sweep.back().layers);
    if (box.x1 == box.x0) box.x1 = box.x0 + 1.0;
    box.y0 = 0.0;
    box.y1 = 1.0;

    std::vector<std::pair<double, double>> ha, tc;
    for (const auto& d : sweep) {
        const double px = box.px(static_cast<double>(d.layers));
        ha.emplace_back(px, box.py(d.hatcn.mean_accuracy));
        tc.emplace_back(px, box.py(d.tcn.mean_accuracy));
    }
    c.polyline(ha, "#d62728");
    c.polyline(tc, "#1f77b4");
    for (const auto& [x, y] : ha) c.circle(x, y, 3, "#d62728");
    for (const auto& [x, y] : tc) c.circle(x, y, 3, "#1f77b4");
    c.axes(box, "hidden layers", "mean accuracy");
    c.text(box.width - box.right, box.top + 12, "hatcn", 11, "end");
    c.text(box.width - box.right, box.top + 26, "tcn", 11, "end");
    return c.str();
}

// Per-epoch training loss.
inline std::string loss_curve(const std::vector<double>& curve) {
    if (curve.empty()) throw UsageError("svg: empty loss curve");
    Canvas c(800, 400);
    PlotBox box;
    box.x0 = 1.0;
    box.x1 = static_cast<double>(curve.size());
    if (box.x1 == box.x0) box.x1 = box.x0 + 1.0;
    std::tie(box.y0, box.y1) = detail::min_max(curve);

    std::vector<std::pair<double, double>> pts;
    for (std::size_t e = 0; e < curve.size(); ++e)
        pts.emplace_back(box.px(static_cast<double>(e + 1)), box.py(curve[e]));
    c.polyline(pts, "#1f77b4");
    c.axes(box, "epoch", "training loss");
    return c.str();
}

}  // namespace hatcn::svg
