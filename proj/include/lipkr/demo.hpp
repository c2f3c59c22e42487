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

#ifndef LIPKR_DEMO_HPP
#define LIPKR_DEMO_HPP

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "lipkr/datasets.hpp"
#include "lipkr/model.hpp"
#include "lipkr/svg.hpp"

namespace lipkr {

/// Per-point scores: "x1,...,xd,label,score".
inline void write_scores_csv(const Model& model, const Dataset& ds, std::ostream& out) {
    for (int d = 0; d < ds.dimension; ++d) out << "x" << (d + 1) << ",";
    out << "label,score\n";
    char buf[64];
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        for (double v : ds.points[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", model.forward(ds.points[i])[0]);
        out << ds.labels[i] << "," << buf << "\n";
    }
}

/// Evaluates f on a resolution x resolution grid over the padded bounding
/// box of the dataset.
inline ScalarGrid evaluate_grid(const Model& model, const Dataset& ds, int resolution = 200,
                                double pad = 0.3) {
    ScalarGrid grid;
    grid.resolution = resolution;
    grid.x_lo = grid.y_lo = 1e300;
    grid.x_hi = grid.y_hi = -1e300;
    for (const auto& p : ds.points) {
        grid.x_lo = std::min(grid.x_lo, p[0]);
        grid.x_hi = std::max(grid.x_hi, p[0]);
        grid.y_lo = std::min(grid.y_lo, p[1]);
        grid.y_hi = std::max(grid.y_hi, p[1]);
    }
    grid.x_lo -= pad;
    grid.x_hi += pad;
    grid.y_lo -= pad;
    grid.y_hi += pad;
    grid.values.resize(static_cast<std::size_t>(resolution) * resolution);
    for (int gy = 0; gy < resolution; ++gy)
        for (int gx = 0; gx < resolution; ++gx)
            grid.values[static_cast<std::size_t>(gy) * resolution + gx] =
                model.forward({grid.x_at(gx), grid.y_at(gy)})[0];
    return grid;
}

/// Grid samples: "x,y,score", resolution^2 rows.
inline void write_grid_csv(const ScalarGrid& grid, std::ostream& out) {
    out << "x,y,score\n";
    char buf[200];
    for (int gy = 0; gy < grid.resolution; ++gy)
        for (int gx = 0; gx < grid.resolution; ++gx) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", grid.x_at(gx), grid.y_at(gy),
                          grid.at(gx, gy));
            out << buf;
        }
}

/// Histogram of scores conditioned on the class:
/// "bin_lo,bin_hi,count_pos,count_neg".
inline void write_score_histogram_csv(const Model& model, const Dataset& ds, int bins,
                                      std::ostream& out) {
    std::vector<double> scores(ds.points.size());
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        scores[i] = model.forward(ds.points[i])[0];
        lo = std::min(lo, scores[i]);
        hi = std::max(hi, scores[i]);
    }
    if (hi <= lo) hi = lo + 1e-9;
    std::vector<int> pos(static_cast<std::size_t>(bins), 0), neg(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        int b = static_cast<int>((scores[i] - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        (ds.labels[i] > 0 ? pos : neg)[static_cast<std::size_t>(b)]++;
    }
    out << "bin_lo,bin_hi,count_pos,count_neg\n";
    char buf[160];
    for (int b = 0; b < bins; ++b) {
        const double bl = lo + (hi - lo) * b / bins;
        const double bh = lo + (hi - lo) * (b + 1) / bins;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%d\n", bl, bh,
                      pos[static_cast<std::size_t>(b)], neg[static_cast<std::size_t>(b)]);
        out << buf;
    }
}

/// Fraction of points whose score falls inside the overlap of the two
/// classes' score ranges; 0 when the conditional distributions separate.
inline double score_overlap_fraction(const Model& model, const Dataset& ds) {
    double min_pos = 1e300, max_pos = -1e300, min_neg = 1e300, max_neg = -1e300;
    std::vector<double> scores(ds.points.size());
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        scores[i] = model.forward(ds.points[i])[0];
        if (ds.labels[i] > 0) {
            min_pos = std::min(min_pos, scores[i]);
            max_pos = std::max(max_pos, scores[i]);
        } else {
            min_neg = std::min(min_neg, scores[i]);
            max_neg = std::max(max_neg, scores[i]);
        }
    }
    const double lo = std::max(min_pos, min_neg);
    const double hi = std::min(max_pos, max_neg);
    if (hi <= lo) return 0.0;
    std::size_t inside = 0;
    for (double s : scores)
        if (s >= lo && s <= hi) ++inside;
    return static_cast<double>(inside) / static_cast<double>(scores.size());
}

}  // namespace lipkr

#endif  // LIPKR_DEMO_HPP
