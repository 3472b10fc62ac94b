#pragma once
// Self-contained vector figures: fixed 800x800 canvas, discrete
// viridis-like palette, marching-squares contour lines, optional shaded
// superlevel region, axis ticks in multiples of pi/2 on a 2pi torus.

#include <functional>
#include <string>
#include <vector>

#include "cellflow/common.hpp"

namespace cellflow {

struct ContourSpec {
    std::string title;
    std::vector<double> levels;       // empty: 9 levels spread over the sampled range
    double shade_threshold = 0;       // fill {field >= threshold} when shade = true
    bool shade = false;
    int samples = 256;                // sampling grid per axis
    std::vector<Vec2> marks;          // crosses (e.g. centers, midpoints)
};

// Samples the field on [0,L1)x[0,L2) and writes an SVG contour figure.
void write_contour_svg(const std::string& path, const std::function<double(Vec2)>& field,
                       double l1, double l2, const ContourSpec& spec);

// Simple polyline chart used for mass curves: x against several y series.
void write_series_svg(const std::string& path, const std::string& title,
                      const std::vector<double>& x,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series,
                      bool log_y = false);

}  // namespace cellflow
