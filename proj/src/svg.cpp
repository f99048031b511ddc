#include "afa/svg.hpp"

#include "afa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace afa {

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

// 1, 2 or 5 times a power of ten, giving about n ticks.
double tick_step(double span, int n) {
    const double raw = span / n;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * p >= raw) return m * p;
    }
    return 10.0 * p;
}

} // namespace

SvgFigure::SvgFigure(PlotFrame frame) : f_(std::move(frame)) {
    if (!(f_.x_max > f_.x_min) || !(f_.y_max > f_.y_min)) throw Error("empty plot range for '" + f_.title + "'");
}

double SvgFigure::px(double x) const {
    return kLeft + (x - f_.x_min) / (f_.x_max - f_.x_min) * (f_.width - kLeft - kRight);
}

double SvgFigure::py(double y) const {
    return f_.height - kBottom - (y - f_.y_min) / (f_.y_max - f_.y_min) * (f_.height - kTop - kBottom);
}

void SvgFigure::scatter(const ScatterSeries& s) {
    body_ += "<g fill=\"" + s.color + "\">\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (s.x[i] < f_.x_min || s.x[i] > f_.x_max || s.y[i] < f_.y_min || s.y[i] > f_.y_max) continue;
        body_ += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"" + num(s.radius) + "\"/>\n";
    }
    body_ += "</g>\n";
    if (!s.label.empty()) legend_.emplace_back(s.color, s.label);
}

void SvgFigure::lines(const LineSeries& s) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double y = std::clamp(s.y[i], f_.y_min, f_.y_max);
        pts += num(px(s.x[i])) + "," + num(py(y)) + " ";
    }
    body_ += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" + num(s.width) + "\"" +
             (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + pts + "\"/>\n";
    if (!s.label.empty()) legend_.emplace_back(s.color, s.label);
}

void SvgFigure::bars(const std::vector<double>& x, const std::vector<double>& y, double bar_width,
                     const std::string& color) {
    body_ += "<g fill=\"" + color + "\">\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = px(x[i] - bar_width / 2);
        const double x1 = px(x[i] + bar_width / 2);
        const double y0 = py(std::max(0.0, f_.y_min));
        const double y1 = py(std::min(y[i], f_.y_max));
        body_ += "<rect x=\"" + num(x0) + "\" y=\"" + num(std::min(y0, y1)) + "\" width=\"" + num(x1 - x0) +
                 "\" height=\"" + num(std::abs(y0 - y1)) + "\"/>\n";
    }
    body_ += "</g>\n";
}

void SvgFigure::heatmap(const std::vector<double>& values, int nx, int ny) {
    if (values.size() != static_cast<std::size_t>(nx) * ny) throw Error("heatmap size mismatch");
    const double vmax = *std::max_element(values.begin(), values.end());
    const double dx = (f_.x_max - f_.x_min) / nx;
    const double dy = (f_.y_max - f_.y_min) / ny;
    body_ += "<g shape-rendering=\"crispEdges\">\n";
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double v = vmax > 0.0 ? values[static_cast<std::size_t>(i) * ny + j] / vmax : 0.0;
            if (v < 1e-3) continue;
            const int g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
            char color[16];
            std::snprintf(color, sizeof color, "#%02x%02x%02x", g, g, g);
            const double x0 = px(f_.x_min + i * dx);
            const double x1 = px(f_.x_min + (i + 1) * dx);
            const double y0 = py(f_.y_min + (j + 1) * dy);
            const double y1 = py(f_.y_min + j * dy);
            body_ += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0 + 0.01) +
                     "\" height=\"" + num(y1 - y0 + 0.01) + "\" fill=\"" + color + "\"/>\n";
        }
    }
    body_ += "</g>\n";
}

std::string SvgFigure::str() const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(f_.width) + "\" height=\"" +
                    std::to_string(f_.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += body_;
    const double x0 = px(f_.x_min), x1 = px(f_.x_max), y0 = py(f_.y_min), y1 = py(f_.y_max);
    s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y0 - y1) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    const double sx = tick_step(f_.x_max - f_.x_min, 6);
    for (double t = std::ceil(f_.x_min / sx) * sx; t <= f_.x_max + 1e-9 * sx; t += sx) {
        s += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px(t)) + "\" y2=\"" + num(y0 + 5) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(px(t)) + "\" y=\"" + num(y0 + 18) + "\" text-anchor=\"middle\">" + tick_label(t) +
             "</text>\n";
    }
    const double sy = tick_step(f_.y_max - f_.y_min, 6);
    for (double t = std::ceil(f_.y_min / sy) * sy; t <= f_.y_max + 1e-9 * sy; t += sy) {
        s += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(py(t)) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
             "</text>\n";
    }
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(f_.height - 15.0) + "\" text-anchor=\"middle\">" +
         escape(f_.x_label) + "</text>\n";
    s += "<text transform=\"translate(18," + num((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(f_.y_label) + "</text>\n";
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + escape(f_.title) +
         "</text>\n";
    double ly = y1 + 16;
    for (const auto& [color, label] : legend_) {
        s += "<rect x=\"" + num(x1 - 150) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" + color +
             "\"/>\n";
        s += "<text x=\"" + num(x1 - 135) + "\" y=\"" + num(ly) + "\">" + escape(label) + "</text>\n";
        ly += 16;
    }
    s += "</svg>\n";
    return s;
}

void SvgFigure::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << str();
    if (!out) throw Error("write failed: " + path.string());
}

} // namespace afa
