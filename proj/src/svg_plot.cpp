#include "cmr/svg_plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cmr/errors.hpp"

namespace cmr {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Panel {
    double x0, y0, w, h;   // drawing area
    double lo, hi;         // value range
    int t_len;

    double px(double t) const { return x0 + w * t / std::max(t_len - 1, 1); }
    double py(double v) const { return y0 + h * (1.0 - (v - lo) / (hi - lo)); }
};

std::string polyline(const Panel& p, const std::vector<double>& vals, const char* color) {
    std::string pts;
    for (int t = 0; t < p.t_len; ++t) {
        pts += num(p.px(t));
        pts += ",";
        pts += num(p.py(vals[t]));
        pts += " ";
    }
    return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

} // namespace

void write_descriptor_plot(const std::filesystem::path& path, const MotionDescriptor& desc,
                           const std::optional<PhaseSet>& phases) {
    const int t_len = static_cast<int>(desc.alpha_raw.size());
    const std::vector<double>& alpha =
        desc.alpha_norm.empty() ? desc.alpha_raw : desc.alpha_norm;
    const std::vector<double>& vnorm = desc.vnorm_raw_mm;

    const double width = 860.0, height = 520.0;
    Panel top{60.0, 30.0, width - 90.0, 200.0, -1.1, 1.1, t_len};
    double vmax = 0.0;
    for (double v : vnorm) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;
    Panel bottom{60.0, 290.0, width - 90.0, 190.0, 0.0, vmax * 1.05, t_len};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
           num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (const Panel& p : {top, bottom}) {
        svg += "  <rect x=\"" + num(p.x0) + "\" y=\"" + num(p.y0) + "\" width=\"" + num(p.w) +
               "\" height=\"" + num(p.h) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    }

    // zero line of the direction curve
    svg += "  <line x1=\"" + num(top.x0) + "\" y1=\"" + num(top.py(0.0)) + "\" x2=\"" +
           num(top.x0 + top.w) + "\" y2=\"" + num(top.py(0.0)) +
           "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";

    if (phases) {
        const struct {
            int idx;
            const char* name;
        } marks[5] = {{phases->ed, "ED"},
                      {phases->ms, "MS"},
                      {phases->es, "ES"},
                      {phases->pf, "PF"},
                      {phases->md, "MD"}};
        for (const auto& m : marks) {
            const double x = top.px(m.idx);
            svg += "  <line x1=\"" + num(x) + "\" y1=\"" + num(top.y0) + "\" x2=\"" + num(x) +
                   "\" y2=\"" + num(bottom.y0 + bottom.h) +
                   "\" stroke=\"#d55\" stroke-width=\"0.8\"/>\n";
            svg += "  <text x=\"" + num(x) + "\" y=\"" + num(top.y0 - 8.0) +
                   "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#d55\">" + m.name +
                   "</text>\n";
        }
    }

    svg += polyline(top, alpha, "#26c");
    svg += polyline(bottom, vnorm, "#222");

    svg += "  <text x=\"20\" y=\"" + num(top.y0 + top.h / 2.0) +
           "\" font-size=\"13\" transform=\"rotate(-90 20 " + num(top.y0 + top.h / 2.0) +
           ")\" text-anchor=\"middle\">direction</text>\n";
    svg += "  <text x=\"20\" y=\"" + num(bottom.y0 + bottom.h / 2.0) +
           "\" font-size=\"13\" transform=\"rotate(-90 20 " + num(bottom.y0 + bottom.h / 2.0) +
           ")\" text-anchor=\"middle\">magnitude (mm)</text>\n";
    svg += "  <text x=\"" + num(top.x0 + top.w / 2.0) + "\" y=\"" + num(height - 10.0) +
           "\" font-size=\"13\" text-anchor=\"middle\">frame</text>\n";

    // frame ticks every 5 frames
    for (int t = 0; t < t_len; t += 5) {
        svg += "  <text x=\"" + num(bottom.px(t)) + "\" y=\"" + num(bottom.y0 + bottom.h + 16.0) +
               "\" font-size=\"10\" text-anchor=\"middle\">" + std::to_string(t) + "</text>\n";
    }

    svg += "</svg>\n";

    std::ofstream out(path);
    if (!out) throw io_error("cannot write plot: " + path.string());
    out << svg;
}

} // namespace cmr
