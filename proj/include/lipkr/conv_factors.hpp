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

#ifndef LIPKR_CONV_FACTORS_HPP
#define LIPKR_CONV_FACTORS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace lipkr {

/// Geometry of a same-padded 2-D convolution with odd kernel k = 2*kh + 1
/// and stride s. Output sizes satisfy w = s*wo + rw with 0 <= rw < s
/// (and likewise for the height).
struct ConvGeometry {
    int kernel = 1;
    int stride = 1;
    int in_width = 1;
    int in_height = 1;
    int out_width = 1;
    int out_height = 1;
    int in_channels = 1;
    int out_channels = 1;

    int half_kernel() const { return (kernel - 1) / 2; }

    static ConvGeometry same(int kernel, int stride, int in_width, int in_height,
                             int in_channels = 1, int out_channels = 1) {
        ConvGeometry g;
        g.kernel = kernel;
        g.stride = stride;
        g.in_width = in_width;
        g.in_height = in_height;
        g.out_width = in_width / stride;
        g.out_height = in_height / stride;
        g.in_channels = in_channels;
        g.out_channels = out_channels;
        return g;
    }
};

namespace detail {

inline void validate_kernel(const ConvGeometry& g) {
    if (g.kernel < 1 || g.kernel % 2 == 0)
        throw std::invalid_argument("conv geometry: kernel must be odd, got " +
                                    std::to_string(g.kernel));
    if (g.stride < 1) throw std::invalid_argument("conv geometry: stride must be >= 1");
    if (g.in_width < 1 || g.in_height < 1)
        throw std::invalid_argument("conv geometry: input sizes must be positive");
}

inline void validate_strided(const ConvGeometry& g) {
    validate_kernel(g);
    const int rw = g.in_width - g.stride * g.out_width;
    const int rh = g.in_height - g.stride * g.out_height;
    if (rw < 0 || rw >= g.stride || rh < 0 || rh >= g.stride)
        throw std::invalid_argument("conv geometry: inconsistent geometry (w != s*wo + rw)");
    if (g.kernel > g.in_width || g.kernel > g.in_height)
        throw std::invalid_argument("conv geometry: kernel larger than input");
}

}  // namespace detail

/// Zero-padded entry counts for one spatial axis of a strided same-padded
/// convolution: `zl` on the leading border, `zr` on the trailing border.
struct AxisZeroCounts {
    long long zl = 0;
    long long zr = 0;
};

/// Counts zero-padded positions contributed by the borders of one axis of
/// length `extent`, for kernel k and stride s. Window t (t = 0..extent/s-1)
/// is centred at t*s and spans [t*s - kh, t*s + kh].
inline AxisZeroCounts strided_zero_counts(int kernel, int stride, int extent) {
    const long long kh = (kernel - 1) / 2;
    const long long s = stride;
    // Leading border: window t has max(0, kh - t*s) padded entries.
    const long long a_bar = kh / s;
    const long long b_bar = kh % s;
    AxisZeroCounts out;
    out.zl = (a_bar + 1) * (a_bar * s + 2 * b_bar) / 2;
    // Trailing border: gamma is the offset of the first window that reaches
    // the last input element.
    const long long numer = extent - 1 - kh;
    const long long ceil_div = numer <= 0 ? 0 : (numer + s - 1) / s;
    const long long gamma = extent - 1 - s * ceil_div;
    const long long a_w = gamma / s;
    out.zr = (a_w + 1) * (kh - gamma) + s * a_w * (a_w + 1) / 2;
    return out;
}

/// Average-duplication normalization factor for a stride-1 same-padded
/// convolution:
///   Lambda = sqrt((k*w - kh*(kh+1)) * (k*h - kh*(kh+1)) / (h*w)).
/// Always at most k, the crude per-entry duplication bound.
inline double conv_lipschitz_factor(const ConvGeometry& g) {
    detail::validate_kernel(g);
    if (g.stride != 1)
        throw std::invalid_argument("conv_lipschitz_factor: stride must be 1, use the strided variant");
    if (g.kernel > g.in_width || g.kernel > g.in_height)
        throw std::invalid_argument("conv_lipschitz_factor: kernel larger than input");
    const double k = g.kernel;
    const double kh = g.half_kernel();
    const double w = g.in_width;
    const double h = g.in_height;
    const double pad = kh * (kh + 1.0);
    return std::sqrt((k * w - pad) * (k * h - pad) / (h * w));
}

/// Strided counterpart:
///   Lambda = sqrt((k*wo - zl - zr_w) * (k*ho - zl - zr_h) / (h*w)).
/// For s = 1 the zero counts satisfy zl + zr = kh*(kh+1) and the value
/// matches `conv_lipschitz_factor` exactly.
inline double conv_lipschitz_factor_strided(const ConvGeometry& g) {
    detail::validate_strided(g);
    const AxisZeroCounts zw = strided_zero_counts(g.kernel, g.stride, g.in_width);
    const AxisZeroCounts zh = strided_zero_counts(g.kernel, g.stride, g.in_height);
    const double k = g.kernel;
    const double nw = k * g.out_width - static_cast<double>(zw.zl + zw.zr);
    const double nh = k * g.out_height - static_cast<double>(zh.zl + zh.zr);
    if (nw <= 0.0 || nh <= 0.0)
        throw std::invalid_argument("conv_lipschitz_factor_strided: degenerate geometry");
    return std::sqrt(nw * nh / (static_cast<double>(g.in_width) * g.in_height));
}

/// Lipschitz constant of average pooling with window `po` and stride `s`:
/// ceil(po/s)/po. Max pooling is 1-Lipschitz and needs no factor.
inline double pooling_lipschitz_constant(int po, int s) {
    if (po < 1) throw std::invalid_argument("pooling_lipschitz_constant: po must be >= 1");
    if (s < 1) throw std::invalid_argument("pooling_lipschitz_constant: s must be >= 1");
    const int alpha = (po + s - 1) / s;
    return static_cast<double>(alpha) / static_cast<double>(po);
}

}  // namespace lipkr

#endif  // LIPKR_CONV_FACTORS_HPP
