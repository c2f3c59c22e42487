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

#ifndef LIPKR_LAYERS_HPP
#define LIPKR_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lipkr/matrix.hpp"

namespace lipkr {

/// Sorts each consecutive group of `group` entries ascending. A trailing
/// remainder group shorter than `group` passes through unsorted. The result
/// is a permutation of the input, so the L2 norm is preserved exactly.
/// `perm`, when given, receives the forward permutation: out[i] = v[perm[i]].
inline Vector groupsort(const Vector& v, int group, std::vector<std::size_t>* perm = nullptr) {
    if (group < 2) throw std::invalid_argument("groupsort: group must be >= 2");
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t g = static_cast<std::size_t>(group);
    for (std::size_t start = 0; start + g <= v.size(); start += g) {
        std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(start + g),
                         [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    }
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[idx[i]];
    if (perm) *perm = std::move(idx);
    return out;
}

/// Sorts the whole vector ascending (stable on ties).
inline Vector fullsort(const Vector& v, std::vector<std::size_t>* perm = nullptr) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[idx[i]];
    if (perm) *perm = std::move(idx);
    return out;
}

/// PReLU with a fixed slope clamped to |alpha| <= 1, which keeps the map
/// 1-Lipschitz. alpha = 1 is the identity and alpha = -1 the absolute value.
inline Vector const_prelu(const Vector& v, double alpha) {
    const double a = std::clamp(alpha, -1.0, 1.0);
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] >= 0.0 ? v[i] : a * v[i];
    return out;
}

/// P-norm pooling of one window. With `include_mean_factor` the window mean
/// enters the norm, ((1/k) sum v_i^P)^(1/P); without it the plain L^P norm
/// is returned, which for P = 2 is norm preserving on a single group.
/// Odd-P semantics assume nonnegative inputs; P = 2 is the usual choice.
inline double pnorm_pool(const Vector& window, double p, bool include_mean_factor = false) {
    if (window.empty()) throw std::invalid_argument("pnorm_pool: empty window");
    if (p < 1.0) throw std::invalid_argument("pnorm_pool: P must be >= 1");
    if (window.size() == 1 && !include_mean_factor) return window[0];
    double acc = 0.0;
    if (p == 2.0) {
        for (double v : window) acc += v * v;
    } else {
        for (double v : window) acc += std::pow(v, p);
    }
    if (include_mean_factor) acc /= static_cast<double>(window.size());
    return p == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / p);
}

/// Gradient of `pnorm_pool` w.r.t. the window entries. The zero window is a
/// kink; the minimal-norm subgradient 0 is used there.
inline Vector pnorm_pool_grad(const Vector& window, double p, bool include_mean_factor,
                              double pooled_value) {
    Vector grad(window.size(), 0.0);
    if (pooled_value == 0.0) return grad;
    const double k = include_mean_factor ? static_cast<double>(window.size()) : 1.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        // d/dv_i ((1/k) sum v^p)^(1/p) = v_i^(p-1) / (k * pooled^(p-1))
        const double num = p == 2.0 ? window[i] : std::pow(window[i], p - 1.0);
        grad[i] = num / (k * (p == 2.0 ? pooled_value : std::pow(pooled_value, p - 1.0)));
    }
    return grad;
}

}  // namespace lipkr

#endif  // LIPKR_LAYERS_HPP
