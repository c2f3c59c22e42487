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

#ifndef LIPKR_DATASETS_HPP
#define LIPKR_DATASETS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipkr/matrix.hpp"
#include "lipkr/rng.hpp"

namespace lipkr {

struct Dataset {
    std::vector<Vector> points;
    std::vector<int> labels;  // +1/-1 for binary, class index otherwise
    int dimension = 0;
};

/// Classic two-moons construction: the positive moon is the upper unit
/// half-circle around the origin; the negative moon is the lower half of the
/// unit circle centred at (1, 0.5), so the two arcs interleave. Isotropic
/// Gaussian noise of the given standard deviation is added per coordinate.
inline Dataset two_moons(int n, double noise, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("two_moons: n must be even and >= 2");
    Rng rng(seed);
    Dataset ds;
    ds.dimension = 2;
    const int half = n / 2;
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < half; ++i) {
        const double t = half == 1 ? 0.0 : pi * static_cast<double>(i) / (half - 1);
        ds.points.push_back({std::cos(t) + noise * rng.normal(), std::sin(t) + noise * rng.normal()});
        ds.labels.push_back(1);
    }
    for (int i = 0; i < half; ++i) {
        const double t = half == 1 ? 0.0 : pi * static_cast<double>(i) / (half - 1);
        ds.points.push_back(
            {1.0 - std::cos(t) + noise * rng.normal(), 0.5 - std::sin(t) + noise * rng.normal()});
        ds.labels.push_back(-1);
    }
    return ds;
}

/// Two uniform clusters in unit boxes whose inter-class distance strictly
/// exceeds `gap` (the second box is shifted along x by 1 + 1.0001 * gap).
/// Used for the separable-classes experiments with gap > 2 * margin.
inline Dataset separated_clusters(int n, double gap, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("separated_clusters: n must be even and >= 2");
    if (gap <= 0.0) throw std::invalid_argument("separated_clusters: gap must be positive");
    Rng rng(seed);
    Dataset ds;
    ds.dimension = 2;
    const double shift = 1.0 + 1.0001 * gap;
    for (int i = 0; i < n / 2; ++i) {
        ds.points.push_back({rng.uniform(), rng.uniform()});
        ds.labels.push_back(1);
    }
    for (int i = 0; i < n / 2; ++i) {
        ds.points.push_back({shift + rng.uniform(), rng.uniform()});
        ds.labels.push_back(-1);
    }
    return ds;
}

inline double dataset_diameter(const Dataset& ds) {
    double best = 0.0;
    for (std::size_t i = 0; i < ds.points.size(); ++i)
        for (std::size_t j = i + 1; j < ds.points.size(); ++j)
            best = std::max(best, l2_distance(ds.points[i], ds.points[j]));
    return best;
}

inline double min_interclass_distance(const Dataset& ds) {
    double best = 1e300;
    for (std::size_t i = 0; i < ds.points.size(); ++i)
        for (std::size_t j = 0; j < ds.points.size(); ++j)
            if (ds.labels[i] != ds.labels[j])
                best = std::min(best, l2_distance(ds.points[i], ds.points[j]));
    return best;
}

/// CSV with header "x1,...,xd,label".
inline void save_csv(const Dataset& ds, std::ostream& out) {
    for (int d = 0; d < ds.dimension; ++d) out << "x" << (d + 1) << ",";
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        for (double v : ds.points[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ",";
        }
        out << ds.labels[i] << "\n";
    }
}

inline Dataset load_csv(std::istream& in) {
    Dataset ds;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("Dataset: empty CSV");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> fields;
        while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
        if (fields.size() < 2) throw std::runtime_error("Dataset: malformed row: " + line);
        ds.labels.push_back(static_cast<int>(fields.back()));
        fields.pop_back();
        if (ds.dimension == 0) ds.dimension = static_cast<int>(fields.size());
        if (static_cast<int>(fields.size()) != ds.dimension)
            throw std::runtime_error("Dataset: inconsistent dimensions");
        ds.points.push_back(std::move(fields));
    }
    return ds;
}

}  // namespace lipkr

#endif  // LIPKR_DATASETS_HPP
