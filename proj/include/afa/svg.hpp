#pragma once

// Static SVG figures: scatter, heatmap, bar and line plots on a single axes box.

#include <filesystem>
#include <string>
#include <vector>

namespace afa {

struct PlotFrame {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    int width = 640;
    int height = 480;
};

struct ScatterSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    double radius = 0.8;
    std::string label;
};

struct LineSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    double width = 1.5;
    bool dashed = false;
    std::string label;
};

class SvgFigure {
public:
    explicit SvgFigure(PlotFrame frame);
    void scatter(const ScatterSeries& s);
    void lines(const LineSeries& s);
    // Bars centred at x with the given width, from y = 0.
    void bars(const std::vector<double>& x, const std::vector<double>& y, double bar_width,
              const std::string& color = "#1f77b4");
    // Row-major values (nx rows along x, ny along y) on the frame box; grey scale,
    // darkest at the maximum.
    void heatmap(const std::vector<double>& values, int nx, int ny);
    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    double px(double x) const;
    double py(double y) const;
    PlotFrame f_;
    std::string body_;
    std::vector<std::pair<std::string, std::string>> legend_;
};

} // namespace afa
