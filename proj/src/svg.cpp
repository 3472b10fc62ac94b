#include "cellflow/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cellflow/report.hpp"

namespace cellflow {

namespace {

constexpr int kCanvas = 800;
constexpr double kMargin = 70.0;
constexpr double kPlot = kCanvas - 2 * kMargin;

// viridis-like anchors, dark to bright
const char* kPalette[] = {"#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187",
                          "#4ac16d", "#a0da39", "#fde725", "#f5f543"};
constexpr int kPaletteN = 9;

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Frame {
    double x0, x1, y0, y1;  // data ranges
    double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * kPlot; }
    // SVG y grows downward
    double py(double y) const { return kCanvas - kMargin - (y - y0) / (y1 - y0) * kPlot; }
};

void open_svg(std::ostringstream& s, const std::string& title) {
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas << "\" height=\""
      << kCanvas << "\" viewBox=\"0 0 " << kCanvas << " " << kCanvas << "\">\n";
    s << "<rect width=\"" << kCanvas << "\" height=\"" << kCanvas << "\" fill=\"white\"/>\n";
    if (!title.empty())
        s << "<text x=\"" << kCanvas / 2 << "\" y=\"34\" text-anchor=\"middle\" "
          << "font-family=\"sans-serif\" font-size=\"20\">" << title << "</text>\n";
}

void axis_box(std::ostringstream& s) {
    s << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot
      << "\" height=\"" << kPlot << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
}

struct Tick {
    double v;
    std::string label;
};

std::vector<Tick> axis_ticks(double lo, double hi) {
    std::vector<Tick> out;
    if (std::fabs(lo) < 1e-12 && std::fabs(hi - kTwoPi) < 1e-9) {
        const char* lab[] = {"0", "&#960;/2", "&#960;", "3&#960;/2", "2&#960;"};
        for (int i = 0; i <= 4; ++i) out.push_back({i * kPi / 2, lab[i]});
        return out;
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        out.push_back({v, f2(v)});
    }
    return out;
}

void draw_axes(std::ostringstream& s, const Frame& fr) {
    axis_box(s);
    for (const Tick& t : axis_ticks(fr.x0, fr.x1)) {
        const double x = fr.px(t.v);
        s << "<line x1=\"" << x << "\" y1=\"" << kCanvas - kMargin << "\" x2=\"" << x << "\" y2=\""
          << kCanvas - kMargin + 6 << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << x << "\" y=\"" << kCanvas - kMargin + 24
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << t.label
          << "</text>\n";
    }
    for (const Tick& t : axis_ticks(fr.y0, fr.y1)) {
        const double y = fr.py(t.v);
        s << "<line x1=\"" << kMargin - 6 << "\" y1=\"" << y << "\" x2=\"" << kMargin << "\" y2=\""
          << y << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << kMargin - 10 << "\" y=\"" << y + 5
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"14\">" << t.label
          << "</text>\n";
    }
}

// marching squares: emit segments of the iso-line {field = level} in one cell
void cell_segments(double level, double x0, double x1, double y0, double y1, double v00,
                   double v10, double v11, double v01, std::vector<std::array<double, 4>>& segs) {
    int idx = 0;
    if (v00 > level) idx |= 1;
    if (v10 > level) idx |= 2;
    if (v11 > level) idx |= 4;
    if (v01 > level) idx |= 8;
    if (idx == 0 || idx == 15) return;
    const auto lerp = [level](double a, double b, double va, double vb) {
        const double d = vb - va;
        double t = std::fabs(d) < 1e-300 ? 0.5 : (level - va) / d;
        t = std::clamp(t, 0.0, 1.0);
        return a + t * (b - a);
    };
    // edge midpoints of the crossing on bottom/right/top/left
    const double bx = lerp(x0, x1, v00, v10), by = y0;
    const double rx = x1, ry = lerp(y0, y1, v10, v11);
    const double tx = lerp(x0, x1, v01, v11), ty = y1;
    const double lx = x0, ly = lerp(y0, y1, v00, v01);
    const auto add = [&](double ax, double ay, double bx2, double by2) {
        segs.push_back({ax, ay, bx2, by2});
    };
    switch (idx) {
        case 1: case 14: add(lx, ly, bx, by); break;
        case 2: case 13: add(bx, by, rx, ry); break;
        case 3: case 12: add(lx, ly, rx, ry); break;
        case 4: case 11: add(tx, ty, rx, ry); break;
        case 6: case 9:  add(bx, by, tx, ty); break;
        case 7: case 8:  add(lx, ly, tx, ty); break;
        case 5: case 10: {
            const double c = 0.25 * (v00 + v10 + v11 + v01);
            const bool flip = (c > level) == (idx == 5);
            if (flip) {
                add(lx, ly, bx, by);
                add(tx, ty, rx, ry);
            } else {
                add(lx, ly, tx, ty);
                add(bx, by, rx, ry);
            }
            break;
        }
        default: break;
    }
}

}  // namespace

void write_contour_svg(const std::string& path, const std::function<double(Vec2)>& field,
                       double l1, double l2, const ContourSpec& spec) {
    const int n = std::max(16, spec.samples);
    std::vector<double> grid(size_t(n + 1) * size_t(n + 1));
    double vmin = 1e300, vmax = -1e300;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            // wrap the last row/column onto the first so contours close
            const double x = (i % n) * l1 / n, y = (j % n) * l2 / n;
            const double v = field({x, y});
            grid[size_t(i) * size_t(n + 1) + size_t(j)] = v;
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    std::vector<double> levels = spec.levels;
    if (levels.empty()) {
        for (int k = 1; k <= 9; ++k) levels.push_back(vmin + (vmax - vmin) * k / 10.0);
    }

    Frame fr{0, l1, 0, l2};
    std::ostringstream s;
    open_svg(s, spec.title);

    if (spec.shade) {
        // per-row runs of fully super-threshold cells
        s << "<g fill=\"#fde725\" fill-opacity=\"0.45\" stroke=\"none\">\n";
        const auto at = [&](int i, int j) { return grid[size_t(i) * size_t(n + 1) + size_t(j)]; };
        for (int j = 0; j < n; ++j) {
            int run = -1;
            for (int i = 0; i <= n; ++i) {
                const bool on = i < n && at(i, j) >= spec.shade_threshold &&
                                at(i + 1, j) >= spec.shade_threshold &&
                                at(i, j + 1) >= spec.shade_threshold &&
                                at(i + 1, j + 1) >= spec.shade_threshold;
                if (on && run < 0) run = i;
                if (!on && run >= 0) {
                    const double xa = fr.px(run * l1 / n), xb = fr.px(i * l1 / n);
                    const double ya = fr.py((j + 1) * l2 / n), yb = fr.py(j * l2 / n);
                    s << "<rect x=\"" << xa << "\" y=\"" << ya << "\" width=\"" << xb - xa
                      << "\" height=\"" << yb - ya << "\"/>\n";
                    run = -1;
                }
            }
        }
        s << "</g>\n";
    }

    std::vector<std::array<double, 4>> segs;
    for (size_t li = 0; li < levels.size(); ++li) {
        segs.clear();
        const double level = levels[li];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double x0 = i * l1 / n, x1 = (i + 1) * l1 / n;
                const double y0 = j * l2 / n, y1 = (j + 1) * l2 / n;
                cell_segments(level, x0, x1, y0, y1, grid[size_t(i) * size_t(n + 1) + size_t(j)],
                              grid[size_t(i + 1) * size_t(n + 1) + size_t(j)],
                              grid[size_t(i + 1) * size_t(n + 1) + size_t(j + 1)],
                              grid[size_t(i) * size_t(n + 1) + size_t(j + 1)], segs);
            }
        const char* color = kPalette[(li * (kPaletteN - 1)) / std::max<size_t>(1, levels.size() - 1)];
        const double width = std::fabs(level) < 1e-12 ? 2.2 : 1.2;
        s << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
          << "\" d=\"";
        for (const auto& sg : segs)
            s << "M" << f2(fr.px(sg[0])) << " " << f2(fr.py(sg[1])) << "L" << f2(fr.px(sg[2]))
              << " " << f2(fr.py(sg[3]));
        s << "\"/>\n";
    }

    for (const Vec2& m : spec.marks) {
        const double x = fr.px(m.x), y = fr.py(m.y);
        s << "<path stroke=\"black\" stroke-width=\"1.5\" d=\"M" << x - 5 << " " << y << "L"
          << x + 5 << " " << y << "M" << x << " " << y - 5 << "L" << x << " " << y + 5
          << "\"/>\n";
    }

    draw_axes(s, fr);
    // level legend
    for (size_t li = 0; li < levels.size(); ++li) {
        const char* color = kPalette[(li * (kPaletteN - 1)) / std::max<size_t>(1, levels.size() - 1)];
        const double y = kMargin + 18 * double(li);
        s << "<rect x=\"" << kCanvas - kMargin + 10 << "\" y=\"" << y
          << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        s << "<text x=\"" << kCanvas - kMargin + 26 << "\" y=\"" << y + 11
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << f2(levels[li]) << "</text>\n";
    }
    s << "</svg>\n";
    write_text(path, s.str());
}

void write_series_svg(const std::string& path, const std::string& title,
                      const std::vector<double>& x,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series,
                      bool log_y) {
    if (x.size() < 2) throw param_error("series figure needs at least two points");
    double ymin = 1e300, ymax = -1e300;
    for (const auto& [name, ys] : series) {
        if (ys.size() != x.size())
            throw param_error("series '" + name + "' length does not match the time grid");
        for (double v : ys) {
            const double t = log_y ? (v > 0 ? std::log10(v) : 1e300) : v;
            if (t == 1e300) continue;
            ymin = std::min(ymin, t);
            ymax = std::max(ymax, t);
        }
    }
    if (!(ymax > ymin)) {
        ymax = ymin + 1;
        ymin -= 1;
    }
    Frame fr{x.front(), x.back(), ymin, ymax};
    std::ostringstream s;
    open_svg(s, title);
    draw_axes(s, fr);
    for (size_t k = 0; k < series.size(); ++k) {
        const char* color = kPalette[(k * (kPaletteN - 1)) % kPaletteN];
        s << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" d=\"";
        bool pen = false;
        for (size_t i = 0; i < x.size(); ++i) {
            const double v = series[k].second[i];
            if (log_y && !(v > 0)) {
                pen = false;
                continue;
            }
            const double yy = log_y ? std::log10(v) : v;
            s << (pen ? "L" : "M") << f2(fr.px(x[i])) << " " << f2(fr.py(yy));
            pen = true;
        }
        s << "\"/>\n";
        s << "<text x=\"" << kCanvas - kMargin - 8 << "\" y=\"" << kMargin + 20 + 18 * double(k)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"13\" fill=\"" << color
          << "\">" << series[k].first << "</text>\n";
    }
    if (log_y)
        s << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 10
          << "\" font-family=\"sans-serif\" font-size=\"12\">log10 scale</text>\n";
    s << "</svg>\n";
    write_text(path, s.str());
}

}  // namespace cellflow
