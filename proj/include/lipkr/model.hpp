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

#ifndef LIPKR_MODEL_HPP
#define LIPKR_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lipkr/conv_factors.hpp"
#include "lipkr/layers.hpp"
#include "lipkr/matrix.hpp"
#include "lipkr/rng.hpp"
#include "lipkr/spectral.hpp"

namespace lipkr {

enum class LayerKind { dense, conv2d, groupsort, fullsort, const_prelu, pnorm_pool, maxpool, avgpool };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::groupsort: return "groupsort";
        case LayerKind::fullsort: return "fullsort";
        case LayerKind::const_prelu: return "const_prelu";
        case LayerKind::pnorm_pool: return "pnorm_pool";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::avgpool: return "avgpool";
    }
    return "unknown";
}

enum class NormalizationMode { spectral, bjorck };

/// Activation/feature shape flowing between layers: either a flat vector or
/// a (channels, height, width) map stored channel-major, row-major.
struct TensorShape {
    int channels = 0;
    int height = 0;
    int width = 0;
    int flat_dim = 0;

    bool is_map() const { return channels > 0; }
    int total() const { return is_map() ? channels * height * width : flat_dim; }

    static TensorShape flat(int dim) {
        if (dim < 1) throw std::invalid_argument("TensorShape::flat: dim must be positive");
        TensorShape s;
        s.flat_dim = dim;
        return s;
    }
    static TensorShape map(int channels, int width, int height) {
        if (channels < 1 || width < 1 || height < 1)
            throw std::invalid_argument("TensorShape::map: sizes must be positive");
        TensorShape s;
        s.channels = channels;
        s.width = width;
        s.height = height;
        return s;
    }
    std::size_t at(int c, int y, int x) const {
        return static_cast<std::size_t>((c * height + y) * width + x);
    }
    bool operator==(const TensorShape& o) const {
        return channels == o.channels && height == o.height && width == o.width &&
               flat_dim == o.flat_dim;
    }
};

/// Construction-time description of one layer.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int units = 0;          // dense
    int out_channels = 0;   // conv2d
    int kernel = 0;         // conv2d
    int stride = 1;         // conv2d
    int group = 2;          // groupsort
    double alpha = 1.0;     // const_prelu, clamped to [-1, 1]
    int pool = 2;           // pooling window
    double exponent = 2.0;  // pnorm_pool
    bool mean_factor = false;

    static LayerSpec dense(int units) {
        LayerSpec s;
        s.kind = LayerKind::dense;
        s.units = units;
        return s;
    }
    static LayerSpec conv2d(int out_channels, int kernel, int stride = 1) {
        LayerSpec s;
        s.kind = LayerKind::conv2d;
        s.out_channels = out_channels;
        s.kernel = kernel;
        s.stride = stride;
        return s;
    }
    static LayerSpec groupsort(int group = 2) {
        LayerSpec s;
        s.kind = LayerKind::groupsort;
        s.group = group;
        return s;
    }
    static LayerSpec fullsort() {
        LayerSpec s;
        s.kind = LayerKind::fullsort;
        return s;
    }
    static LayerSpec const_prelu(double alpha) {
        LayerSpec s;
        s.kind = LayerKind::const_prelu;
        s.alpha = std::clamp(alpha, -1.0, 1.0);
        return s;
    }
    static LayerSpec pnorm_pool(int pool, double exponent = 2.0, bool mean_factor = false) {
        LayerSpec s;
        s.kind = LayerKind::pnorm_pool;
        s.pool = pool;
        s.exponent = exponent;
        s.mean_factor = mean_factor;
        return s;
    }
    static LayerSpec maxpool(int pool) {
        LayerSpec s;
        s.kind = LayerKind::maxpool;
        s.pool = pool;
        return s;
    }
    static LayerSpec avgpool(int pool) {
        LayerSpec s;
        s.kind = LayerKind::avgpool;
        s.pool = pool;
        return s;
    }
};

struct Layer {
    LayerSpec spec;
    TensorShape in_shape;
    TensorShape out_shape;
    Matrix weight;  // dense: units x in_total; conv2d: out_channels x (in_c * k * k)
    Vector bias;    // dense: units; conv2d: out_channels

    // Persisted power-iteration right vector, used as a warm start across
    // normalization calls.
    Vector warm_right;

    bool has_params() const {
        return spec.kind == LayerKind::dense || spec.kind == LayerKind::conv2d;
    }

    ConvGeometry conv_geometry() const {
        ConvGeometry g;
        g.kernel = spec.kernel;
        g.stride = spec.stride;
        g.in_width = in_shape.width;
        g.in_height = in_shape.height;
        g.out_width = out_shape.width;
        g.out_height = out_shape.height;
        g.in_channels = in_shape.channels;
        g.out_channels = spec.out_channels;
        return g;
    }
};

/// Per-example cached state required by the backward pass.
struct LayerTrace {
    Vector input;
    std::vector<std::size_t> perm;    // sorts: out[i] = in[perm[i]]
    std::vector<std::size_t> argmax;  // maxpool winner per window
    Vector pooled;                    // pnorm pooled value per window
};

struct Trace {
    std::vector<LayerTrace> layers;
    Vector output;
};

struct GradientReport {
    Vector input_grad;
    std::vector<Matrix> weight_grads;  // aligned with layers, empty when no params
    std::vector<Vector> bias_grads;
};

struct NormalizationParams {
    int power_iters = 100;
    double power_tol = 1e-6;
    int bjorck_order = 1;
    int bjorck_iters = 15;
};

/// Ordered stack of 1-Lipschitz-constrained layers evaluating q raw scores.
/// Weights are mutable through `layers()`; forward/backward are const and
/// safe to call concurrently on a shared instance.
class Model {
public:
    Model() = default;

    Model(TensorShape input, const std::vector<LayerSpec>& specs, NormalizationMode mode)
        : input_shape_(input), mode_(mode) {
        if (specs.empty()) throw std::invalid_argument("Model: needs at least one layer");
        TensorShape cur = input;
        for (const auto& spec : specs) {
            Layer layer;
            layer.spec = spec;
            layer.in_shape = cur;
            layer.out_shape = resolve_shape(spec, cur);
            if (layer.has_params()) allocate_params(layer);
            cur = layer.out_shape;
            layers_.push_back(std::move(layer));
        }
        if (cur.is_map())
            throw std::invalid_argument("Model: output must be flat; end the stack with a dense layer");
        output_count_ = cur.total();
    }

    int output_count() const { return output_count_; }
    const TensorShape& input_shape() const { return input_shape_; }
    NormalizationMode normalization_mode() const { return mode_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    /// Index of the layer treated as the output layer for per-row
    /// normalization (the last dense layer), or -1 if there is none.
    int output_dense_index() const {
        for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
            if (layers_[static_cast<std::size_t>(i)].spec.kind == LayerKind::dense) return i;
            if (layers_[static_cast<std::size_t>(i)].has_params()) break;
        }
        return -1;
    }

    void init_weights(Rng& rng) {
        for (auto& layer : layers_) {
            if (!layer.has_params()) continue;
            const double scale = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
            for (auto& w : layer.weight.data()) w = rng.normal() * scale;
            std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
            layer.warm_right.clear();
        }
    }

    Vector forward(const Vector& x) const {
        Trace trace;
        return forward(x, trace);
    }

    Vector forward(const Vector& x, Trace& trace) const {
        if (static_cast<int>(x.size()) != input_shape_.total())
            throw std::invalid_argument("Model::forward: input dimension mismatch, expected " +
                                        std::to_string(input_shape_.total()) + " got " +
                                        std::to_string(x.size()));
        trace.layers.assign(layers_.size(), {});
        Vector cur = x;
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            cur = apply_layer(layers_[li], cur, trace.layers[li]);
        }
        trace.output = cur;
        return cur;
    }

    /// Reverse-mode gradients of <upstream, f(x)> w.r.t. the input and every
    /// parameter tensor. `trace` must come from a forward pass with the
    /// current weights.
    GradientReport backward(const Trace& trace, const Vector& upstream) const {
        if (static_cast<int>(upstream.size()) != output_count_)
            throw std::invalid_argument("Model::backward: upstream length mismatch");
        GradientReport report;
        report.weight_grads.resize(layers_.size());
        report.bias_grads.resize(layers_.size());
        Vector grad = upstream;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            grad = backward_layer(layers_[i], trace.layers[i], grad, report.weight_grads[i],
                                  report.bias_grads[i]);
        }
        report.input_grad = std::move(grad);
        return report;
    }

    GradientReport backward(const Vector& x, const Vector& upstream) const {
        Trace trace;
        forward(x, trace);
        return backward(trace, upstream);
    }

    /// Gradient of output `k` w.r.t. the input.
    Vector input_gradient(const Vector& x, int k = 0) const {
        Vector upstream(static_cast<std::size_t>(output_count_), 0.0);
        upstream.at(static_cast<std::size_t>(k)) = 1.0;
        return backward(x, upstream).input_grad;
    }

    /// Projects every parametric layer onto (a slight superset of) the
    /// 1-Lipschitz constraint set. Dense layers are divided by their spectral
    /// norm or Bjorck-orthonormalized; convolution kernels additionally pick
    /// up the geometry factor Lambda. The rows of the output dense layer are
    /// normalized independently. Idempotent to well below 1e-8.
    void normalize_weights(const NormalizationParams& params, Rng& rng) {
        const int out_idx = output_dense_index();
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            Layer& layer = layers_[li];
            if (!layer.has_params()) continue;
            if (static_cast<int>(li) == out_idx) {
                normalize_rows(layer);
            } else if (layer.spec.kind == LayerKind::dense) {
                normalize_dense(layer, params, rng, 1.0);
            } else {
                const double lambda = conv_lipschitz_factor_strided(layer.conv_geometry());
                normalize_dense(layer, params, rng, lambda);
            }
        }
    }

private:
    static TensorShape resolve_shape(const LayerSpec& spec, const TensorShape& in) {
        switch (spec.kind) {
            case LayerKind::dense:
                if (spec.units < 1) throw std::invalid_argument("dense: units must be positive");
                return TensorShape::flat(spec.units);
            case LayerKind::conv2d: {
                if (!in.is_map())
                    throw std::invalid_argument("conv2d: requires a feature-map input");
                if (spec.kernel < 1 || spec.kernel % 2 == 0)
                    throw std::invalid_argument("conv2d: kernel must be odd");
                if (spec.kernel > in.width || spec.kernel > in.height)
                    throw std::invalid_argument("conv2d: kernel larger than input");
                if (spec.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
                if (spec.out_channels < 1)
                    throw std::invalid_argument("conv2d: out_channels must be positive");
                const int wo = in.width / spec.stride;
                const int ho = in.height / spec.stride;
                if (wo < 1 || ho < 1) throw std::invalid_argument("conv2d: stride too large");
                return TensorShape::map(spec.out_channels, wo, ho);
            }
            case LayerKind::groupsort:
                if (spec.group < 2) throw std::invalid_argument("groupsort: group must be >= 2");
                return in;
            case LayerKind::fullsort:
                if (in.is_map())
                    throw std::invalid_argument("fullsort: requires a flat input");
                return in;
            case LayerKind::const_prelu:
                return in;
            case LayerKind::pnorm_pool:
            case LayerKind::maxpool:
            case LayerKind::avgpool: {
                if (spec.pool < 1) throw std::invalid_argument("pool: window must be >= 1");
                if (in.is_map()) {
                    if (in.width % spec.pool != 0 || in.height % spec.pool != 0)
                        throw std::invalid_argument("pool: window must divide the map size");
                    return TensorShape::map(in.channels, in.width / spec.pool,
                                            in.height / spec.pool);
                }
                if (in.flat_dim % spec.pool != 0)
                    throw std::invalid_argument("pool: window must divide the vector length");
                return TensorShape::flat(in.flat_dim / spec.pool);
            }
        }
        throw std::invalid_argument("unknown layer kind");
    }

    static void allocate_params(Layer& layer) {
        if (layer.spec.kind == LayerKind::dense) {
            layer.weight = Matrix(static_cast<std::size_t>(layer.spec.units),
                                  static_cast<std::size_t>(layer.in_shape.total()));
            layer.bias.assign(static_cast<std::size_t>(layer.spec.units), 0.0);
        } else {
            const int k = layer.spec.kernel;
            layer.weight = Matrix(static_cast<std::size_t>(layer.spec.out_channels),
                                  static_cast<std::size_t>(layer.in_shape.channels * k * k));
            layer.bias.assign(static_cast<std::size_t>(layer.spec.out_channels), 0.0);
        }
    }

    static Vector apply_layer(const Layer& layer, const Vector& in, LayerTrace& trace) {
        switch (layer.spec.kind) {
            case LayerKind::dense: {
                trace.input = in;
                Vector out = matvec(layer.weight, in);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += layer.bias[i];
                return out;
            }
            case LayerKind::conv2d:
                trace.input = in;
                return conv_forward(layer, in);
            case LayerKind::groupsort: {
                if (!layer.in_shape.is_map()) return lipkr::groupsort(in, layer.spec.group, &trace.perm);
                return map_channel_groupsort(layer, in, trace.perm);
            }
            case LayerKind::fullsort:
                return lipkr::fullsort(in, &trace.perm);
            case LayerKind::const_prelu: {
                trace.input = in;
                return lipkr::const_prelu(in, layer.spec.alpha);
            }
            case LayerKind::pnorm_pool: {
                trace.input = in;
                Vector out(static_cast<std::size_t>(layer.out_shape.total()));
                trace.pooled.resize(out.size());
                for_each_window(layer, [&](std::size_t wi, const std::vector<std::size_t>& idx) {
                    Vector window(idx.size());
                    for (std::size_t t = 0; t < idx.size(); ++t) window[t] = in[idx[t]];
                    out[wi] = pnorm_pool(window, layer.spec.exponent, layer.spec.mean_factor);
                    trace.pooled[wi] = out[wi];
                });
                return out;
            }
            case LayerKind::maxpool: {
                Vector out(static_cast<std::size_t>(layer.out_shape.total()));
                trace.argmax.resize(out.size());
                for_each_window(layer, [&](std::size_t wi, const std::vector<std::size_t>& idx) {
                    std::size_t best = idx[0];
                    for (std::size_t t = 1; t < idx.size(); ++t)
                        if (in[idx[t]] > in[best]) best = idx[t];
                    out[wi] = in[best];
                    trace.argmax[wi] = best;
                });
                return out;
            }
            case LayerKind::avgpool: {
                Vector out(static_cast<std::size_t>(layer.out_shape.total()));
                for_each_window(layer, [&](std::size_t wi, const std::vector<std::size_t>& idx) {
                    double acc = 0.0;
                    for (std::size_t t = 0; t < idx.size(); ++t) acc += in[idx[t]];
                    out[wi] = acc / static_cast<double>(idx.size());
                });
                return out;
            }
        }
        throw std::logic_error("apply_layer: unknown kind");
    }

    static Vector backward_layer(const Layer& layer, const LayerTrace& trace, const Vector& grad,
                                 Matrix& wgrad, Vector& bgrad) {
        switch (layer.spec.kind) {
            case LayerKind::dense: {
                wgrad = Matrix(layer.weight.rows(), layer.weight.cols());
                bgrad = grad;
                for (std::size_t i = 0; i < layer.weight.rows(); ++i)
                    for (std::size_t j = 0; j < layer.weight.cols(); ++j)
                        wgrad(i, j) = grad[i] * trace.input[j];
                return matvec_transposed(layer.weight, grad);
            }
            case LayerKind::conv2d:
                return conv_backward(layer, trace.input, grad, wgrad, bgrad);
            case LayerKind::groupsort:
            case LayerKind::fullsort: {
                Vector in_grad(trace.perm.size(), 0.0);
                for (std::size_t i = 0; i < trace.perm.size(); ++i)
                    in_grad[trace.perm[i]] += grad[i];
                return in_grad;
            }
            case LayerKind::const_prelu: {
                Vector in_grad(grad.size());
                const double a = layer.spec.alpha;
                for (std::size_t i = 0; i < grad.size(); ++i)
                    in_grad[i] = trace.input[i] >= 0.0 ? grad[i] : a * grad[i];
                return in_grad;
            }
            case LayerKind::pnorm_pool: {
                Vector in_grad(trace.input.size(), 0.0);
                for_each_window(layer, [&](std::size_t wi, const std::vector<std::size_t>& idx) {
                    Vector window(idx.size());
                    for (std::size_t t = 0; t < idx.size(); ++t) window[t] = trace.input[idx[t]];
                    const Vector wg = pnorm_pool_grad(window, layer.spec.exponent,
                                                      layer.spec.mean_factor, trace.pooled[wi]);
                    for (std::size_t t = 0; t < idx.size(); ++t)
                        in_grad[idx[t]] += grad[wi] * wg[t];
                });
                return in_grad;
            }
            case LayerKind::maxpool: {
                Vector in_grad(static_cast<std::size_t>(layer.in_shape.total()), 0.0);
                for (std::size_t wi = 0; wi < trace.argmax.size(); ++wi)
                    in_grad[trace.argmax[wi]] += grad[wi];
                return in_grad;
            }
            case LayerKind::avgpool: {
                Vector in_grad(static_cast<std::size_t>(layer.in_shape.total()), 0.0);
                for_each_window(layer, [&](std::size_t wi, const std::vector<std::size_t>& idx) {
                    const double share = grad[wi] / static_cast<double>(idx.size());
                    for (std::size_t t = 0; t < idx.size(); ++t) in_grad[idx[t]] += share;
                });
                return in_grad;
            }
        }
        throw std::logic_error("backward_layer: unknown kind");
    }

    /// Same-padded convolution; output position (oy, ox) is centred on input
    /// position (oy*s, ox*s).
    static Vector conv_forward(const Layer& layer, const Vector& in) {
        const TensorShape& is = layer.in_shape;
        const TensorShape& os = layer.out_shape;
        const int k = layer.spec.kernel;
        const int kh = (k - 1) / 2;
        const int s = layer.spec.stride;
        Vector out(static_cast<std::size_t>(os.total()), 0.0);
        for (int oc = 0; oc < os.channels; ++oc) {
            for (int oy = 0; oy < os.height; ++oy) {
                for (int ox = 0; ox < os.width; ++ox) {
                    double acc = layer.bias[static_cast<std::size_t>(oc)];
                    for (int ic = 0; ic < is.channels; ++ic) {
                        for (int dy = 0; dy < k; ++dy) {
                            const int iy = oy * s + dy - kh;
                            if (iy < 0 || iy >= is.height) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                const int ix = ox * s + dx - kh;
                                if (ix < 0 || ix >= is.width) continue;
                                acc += layer.weight(static_cast<std::size_t>(oc),
                                                    static_cast<std::size_t>((ic * k + dy) * k + dx)) *
                                       in[is.at(ic, iy, ix)];
                            }
                        }
                    }
                    out[os.at(oc, oy, ox)] = acc;
                }
            }
        }
        return out;
    }

    static Vector conv_backward(const Layer& layer, const Vector& in, const Vector& grad,
                                Matrix& wgrad, Vector& bgrad) {
        const TensorShape& is = layer.in_shape;
        const TensorShape& os = layer.out_shape;
        const int k = layer.spec.kernel;
        const int kh = (k - 1) / 2;
        const int s = layer.spec.stride;
        wgrad = Matrix(layer.weight.rows(), layer.weight.cols());
        bgrad.assign(layer.bias.size(), 0.0);
        Vector in_grad(in.size(), 0.0);
        for (int oc = 0; oc < os.channels; ++oc) {
            for (int oy = 0; oy < os.height; ++oy) {
                for (int ox = 0; ox < os.width; ++ox) {
                    const double g = grad[os.at(oc, oy, ox)];
                    if (g == 0.0) continue;
                    bgrad[static_cast<std::size_t>(oc)] += g;
                    for (int ic = 0; ic < is.channels; ++ic) {
                        for (int dy = 0; dy < k; ++dy) {
                            const int iy = oy * s + dy - kh;
                            if (iy < 0 || iy >= is.height) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                const int ix = ox * s + dx - kh;
                                if (ix < 0 || ix >= is.width) continue;
                                const std::size_t widx =
                                    static_cast<std::size_t>((ic * k + dy) * k + dx);
                                wgrad(static_cast<std::size_t>(oc), widx) += g * in[is.at(ic, iy, ix)];
                                in_grad[is.at(ic, iy, ix)] +=
                                    g * layer.weight(static_cast<std::size_t>(oc), widx);
                            }
                        }
                    }
                }
            }
        }
        return in_grad;
    }

    static Vector map_channel_groupsort(const Layer& layer, const Vector& in,
                                        std::vector<std::size_t>& perm) {
        // Sorts channel values in groups independently at every spatial
        // position (the usual GroupSort for feature maps).
        const TensorShape& is = layer.in_shape;
        perm.resize(in.size());
        Vector out(in.size());
        std::vector<std::size_t> idx;
        for (int y = 0; y < is.height; ++y) {
            for (int x = 0; x < is.width; ++x) {
                idx.resize(static_cast<std::size_t>(is.channels));
                for (int c = 0; c < is.channels; ++c)
                    idx[static_cast<std::size_t>(c)] = is.at(c, y, x);
                const std::size_t g = static_cast<std::size_t>(layer.spec.group);
                for (std::size_t start = 0; start + g <= idx.size(); start += g) {
                    std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                     idx.begin() + static_cast<std::ptrdiff_t>(start + g),
                                     [&in](std::size_t a, std::size_t b) { return in[a] < in[b]; });
                }
                for (int c = 0; c < is.channels; ++c) {
                    const std::size_t dst = is.at(c, y, x);
                    perm[dst] = idx[static_cast<std::size_t>(c)];
                    out[dst] = in[perm[dst]];
                }
            }
        }
        return out;
    }

    template <class Fn>
    static void for_each_window(const Layer& layer, Fn&& fn) {
        const TensorShape& is = layer.in_shape;
        const int po = layer.spec.pool;
        std::vector<std::size_t> idx;
        std::size_t wi = 0;
        if (is.is_map()) {
            const int wo = is.width / po;
            const int ho = is.height / po;
            idx.resize(static_cast<std::size_t>(po * po));
            for (int c = 0; c < is.channels; ++c)
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox) {
                        std::size_t t = 0;
                        for (int dy = 0; dy < po; ++dy)
                            for (int dx = 0; dx < po; ++dx)
                                idx[t++] = is.at(c, oy * po + dy, ox * po + dx);
                        fn(wi++, idx);
                    }
        } else {
            idx.resize(static_cast<std::size_t>(po));
            for (int start = 0; start + po <= is.flat_dim; start += po) {
                for (int t = 0; t < po; ++t) idx[static_cast<std::size_t>(t)] =
                    static_cast<std::size_t>(start + t);
                fn(wi++, idx);
            }
        }
    }

    void normalize_rows(Layer& layer) {
        for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < layer.weight.cols(); ++j)
                norm_sq += layer.weight(r, j) * layer.weight(r, j);
            if (norm_sq == 0.0)
                throw std::runtime_error("normalize_weights: degenerate (all-zero) output row");
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (std::size_t j = 0; j < layer.weight.cols(); ++j) layer.weight(r, j) *= inv;
        }
    }

    // Shared dense/conv path; `lambda` is 1 for dense layers and the conv
    // geometry factor otherwise (weights end up divided by lambda * sigma).
    void normalize_dense(Layer& layer, const NormalizationParams& params, Rng& rng, double lambda) {
        Matrix& w = layer.weight;
        if (max_abs(w) == 0.0)
            throw std::runtime_error("normalize_weights: degenerate (all-zero) layer");
        if (mode_ == NormalizationMode::bjorck) {
            // Fixed point: lambda * w orthonormal.
            Matrix scaled_w = w * lambda;
            if (gram_residual(scaled_w) < 1e-9) return;
            const SpectralEstimate est = estimate_sigma(layer, params, rng);
            Matrix pre = w;
            if (est.sigma > 1.0) pre *= 1.0 / est.sigma;
            Matrix ortho = bjorck_orthonormalize(pre, params.bjorck_order, params.bjorck_iters);
            ortho *= 1.0 / lambda;
            w = std::move(ortho);
        } else {
            const SpectralEstimate est = estimate_sigma(layer, params, rng);
            if (est.sigma <= 0.0)
                throw std::runtime_error("normalize_weights: degenerate (all-zero) layer");
            const double scale = lambda * est.sigma;
            // Skip band keeps repeated normalization exactly idempotent.
            if (std::abs(scale - 1.0) <= 5e-6) return;
            w *= 1.0 / scale;
        }
    }

    SpectralEstimate estimate_sigma(Layer& layer, const NormalizationParams& params, Rng& rng) {
        Vector start;
        if (layer.warm_right.size() == layer.weight.cols()) {
            start = layer.warm_right;
        } else {
            start = rng.unit_vector(layer.weight.cols());
        }
        SpectralEstimate est =
            power_iteration_from(layer.weight, params.power_iters, params.power_tol, std::move(start));
        layer.warm_right = est.right_vec;
        return est;
    }

    TensorShape input_shape_;
    std::vector<Layer> layers_;
    NormalizationMode mode_ = NormalizationMode::bjorck;
    int output_count_ = 0;
};

}  // namespace lipkr

#endif  // LIPKR_MODEL_HPP
