/*
 * Copyright 2026 The lipkr authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIPKR_SVG_HPP
#define LIPKR_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "lipkr/datasets.hpp"
#include "lipkr/matrix.hpp"

namespace lipkr {

/// Scalar field sampled on a regular grid over [x_lo, x_hi] x [y_lo, y_hi].
struct ScalarGrid {
    int resolution = 200;
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    std::vector<double> values;  // row-major, values[gy * resolution + gx]

    double x_at(int gx) const {
        return x_lo + (x_hi - x_lo) * (gx + 0.5) / static_cast<double>(resolution);
    }
    double y_at(int gy) const {
        return y_lo + (y_hi - y_lo) * (gy + 0.5) / static_cast<double>(resolution);
    }
    double at(int gx, int gy) const { return values[static_cast<std::size_t>(gy) * resolution + gx]; }
};

namespace detail {

inline std::string ramp_color(double t) {
    // Diverging blue -> white -> red ramp for t in [-1, 1].
    t = std::clamp(t, -1.0, 1.0);
    int r, g, b;
    if (t < 0.0) {
        const double u = 1.0 + t;  // 0 at deep blue
        r = static_cast<int>(40 + 215 * u);
        g = static_cast<int>(80 + 175 * u);
        b = 255;
    } else {
        const double u = 1.0 - t;
        r = 255;
        g = static_cast<int>(80 + 175 * u);
        b = static_cast<int>(40 + 215 * u);
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace detail

/// Writes a colored level map of the grid with the zero contour (marching
/// squares) drawn black and the dataset points overlaid.
inline void write_level_map_svg(const ScalarGrid& grid, const Dataset& points, std::ostream& out) {
    const int res = grid.resolution;
    const double px = 3.0;  // pixels per cell
    const double width = res * px;
    const double height = res * px;
    double max_abs_value = 1e-12;
    for (double v : grid.values) max_abs_value = std::max(max_abs_value, std::abs(v));

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";

    auto to_px_x = [&](double x) {
        return (x - grid.x_lo) / (grid.x_hi - grid.x_lo) * width;
    };
    auto to_px_y = [&](double y) {
        return height - (y - grid.y_lo) / (grid.y_hi - grid.y_lo) * height;
    };

    // Cells, one rect per grid sample.
    for (int gy = 0; gy < res; ++gy) {
        for (int gx = 0; gx < res; ++gx) {
            const double v = grid.at(gx, gy) / max_abs_value;
            out << "<rect x=\"" << gx * px << "\" y=\"" << (res - 1 - gy) * px << "\" width=\"" << px
                << "\" height=\"" << px << "\" fill=\"" << detail::ramp_color(v) << "\"/>\n";
        }
    }

    // Zero-level contour by marching squares on cell corners.
    out << "<g stroke=\"black\" stroke-width=\"1.5\">\n";
    auto interp = [](double a, double b) { return a / (a - b); };
    for (int gy = 0; gy + 1 < res; ++gy) {
        for (int gx = 0; gx + 1 < res; ++gx) {
            const double v00 = grid.at(gx, gy), v10 = grid.at(gx + 1, gy);
            const double v01 = grid.at(gx, gy + 1), v11 = grid.at(gx + 1, gy + 1);
            struct Pt {
                double x, y;
            };
            std::vector<Pt> hits;
            const double x0 = to_px_x(grid.x_at(gx)), x1 = to_px_x(grid.x_at(gx + 1));
            const double y0 = to_px_y(grid.y_at(gy)), y1 = to_px_y(grid.y_at(gy + 1));
            if ((v00 < 0) != (v10 < 0)) hits.push_back({x0 + (x1 - x0) * interp(v00, v10), y0});
            if ((v01 < 0) != (v11 < 0)) hits.push_back({x0 + (x1 - x0) * interp(v01, v11), y1});
            if ((v00 < 0) != (v01 < 0)) hits.push_back({x0, y0 + (y1 - y0) * interp(v00, v01)});
            if ((v10 < 0) != (v11 < 0)) hits.push_back({x1, y0 + (y1 - y0) * interp(v10, v11)});
            if (hits.size() >= 2) {
                out << "<line x1=\"" << hits[0].x << "\" y1=\"" << hits[0].y << "\" x2=\""
                    << hits[1].x << "\" y2=\"" << hits[1].y << "\"/>\n";
                if (hits.size() == 4)
                    out << "<line x1=\"" << hits[2].x << "\" y1=\"" << hits[2].y << "\" x2=\""
                        << hits[3].x << "\" y2=\"" << hits[3].y << "\"/>\n";
            }
        }
    }
    out << "</g>\n";

    for (std::size_t i = 0; i < points.points.size(); ++i) {
        const auto& p = points.points[i];
        const char* fill = points.labels[i] > 0 ? "#7a0000" : "#00186e";
        out << "<circle cx=\"" << to_px_x(p[0]) << "\" cy=\"" << to_px_y(p[1])
            << "\" r=\"2.5\" fill=\"" << fill << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    out << "</svg>\n";
}

}  // namespace lipkr

#endif  // LIPKR_SVG_HPP
