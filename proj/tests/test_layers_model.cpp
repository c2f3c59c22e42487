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

#include <catch2/catch_amalgamated.hpp>

#include "lipkr/layers.hpp"
#include "lipkr/model.hpp"
#include "lipkr/serialize.hpp"
#include "oracles.hpp"

using lipkr::LayerSpec;
using lipkr::Matrix;
using lipkr::Model;
using lipkr::NormalizationMode;
using lipkr::NormalizationParams;
using lipkr::Rng;
using lipkr::TensorShape;
using lipkr::Vector;

namespace {

Model make_dense_model(const std::vector<LayerSpec>& specs, int input_dim,
                       NormalizationMode mode, std::uint64_t seed) {
    Model model(TensorShape::flat(input_dim), specs, mode);
    Rng rng(seed);
    model.init_weights(rng);
    return model;
}

// <upstream, f(x)> for finite-difference reference values.
double weighted_output(const Model& model, const Vector& x, const Vector& upstream) {
    const Vector out = model.forward(x);
    return lipkr::dot(out, upstream);
}

}  // namespace

TEST_CASE("groupsort sorts pairs and preserves the multiset") {
    std::vector<std::size_t> perm;
    REQUIRE(lipkr::groupsort({3, 1, 2, 5}, 2, &perm) == Vector{1, 3, 2, 5});
    REQUIRE(lipkr::groupsort({1, 2, 3, 4}, 2) == Vector{1, 2, 3, 4});
    Rng rng(2);
    const Vector v = oracles::random_vector(17, rng);  // odd tail passes through
    const Vector out = lipkr::groupsort(v, 4);
    REQUIRE(lipkr::l2_norm(out) == lipkr::l2_norm(v));
    Vector a = v, b = out;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    REQUIRE(a == b);
    REQUIRE(out[16] == v[16]);
}

TEST_CASE("fullsort is an ascending permutation") {
    REQUIRE(lipkr::fullsort({3, 1, 2}) == Vector{1, 2, 3});
    REQUIRE(lipkr::fullsort({2, 2, 2}) == Vector{2, 2, 2});
    Rng rng(3);
    const Vector v = oracles::random_vector(33, rng);
    Vector want = v;
    std::sort(want.begin(), want.end());
    REQUIRE(lipkr::fullsort(v) == want);
}

TEST_CASE("const_prelu endpoints and a mid slope") {
    const Vector v{-2, 2};
    REQUIRE(lipkr::const_prelu(v, 1.0) == v);
    REQUIRE(lipkr::const_prelu(v, -1.0) == Vector{2, 2});
    REQUIRE(lipkr::const_prelu(v, 0.5) == Vector{-1, 2});
}

TEST_CASE("pnorm_pool values") {
    REQUIRE(lipkr::pnorm_pool({3, 4}, 2.0, false) == 5.0);
    REQUIRE_THAT(lipkr::pnorm_pool({3, 4}, 2.0, true),
                 Catch::Matchers::WithinAbs(5.0 / std::sqrt(2.0), 1e-14));
    REQUIRE(lipkr::pnorm_pool({7.5}, 3.0, false) == 7.5);
    REQUIRE_THROWS_AS(lipkr::pnorm_pool({}, 2.0, false), std::invalid_argument);
}

TEST_CASE("identity dense layer is the identity map") {
    Model model(TensorShape::flat(3), {LayerSpec::dense(3)}, NormalizationMode::spectral);
    model.layers()[0].weight = Matrix::identity(3);
    const Vector x{0.3, -0.7, 1.1};
    REQUIRE(model.forward(x) == x);
}

TEST_CASE("dense identity followed by groupsort2 sorts the input pair") {
    Model model(TensorShape::flat(2), {LayerSpec::dense(2), LayerSpec::groupsort(2)},
                NormalizationMode::spectral);
    model.layers()[0].weight = Matrix::identity(2);
    REQUIRE(model.forward({3, 1}) == Vector{1, 3});
}

TEST_CASE("forward rejects dimension mismatches") {
    Model model(TensorShape::flat(3), {LayerSpec::dense(2)}, NormalizationMode::spectral);
    REQUIRE_THROWS_AS(model.forward({1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("normalized random two-layer net is empirically 1-Lipschitz") {
    Model model = make_dense_model(
        {LayerSpec::dense(16), LayerSpec::groupsort(2), LayerSpec::dense(1)}, 4,
        NormalizationMode::bjorck, 77);
    Rng rng(78);
    model.normalize_weights(NormalizationParams{}, rng);
    for (int rep = 0; rep < 1000; ++rep) {
        const Vector a = oracles::random_vector(4, rng);
        const Vector b = oracles::random_vector(4, rng);
        const double num = std::abs(model.forward(a)[0] - model.forward(b)[0]);
        const double den = lipkr::l2_distance(a, b);
        if (den > 1e-9) REQUIRE(num / den <= 1.0 + 1e-3);
    }
}

TEST_CASE("conv2d forward matches the explicit duplication-matrix product") {
    for (const int stride : {1, 2}) {
        const int c = 2, k = 3, w = 5, h = 5, l = 3;
        Model model(TensorShape::map(c, w, h), {LayerSpec::conv2d(l, k, stride), LayerSpec::dense(2)},
                    NormalizationMode::spectral);
        Rng rng(100 + stride);
        model.init_weights(rng);
        const auto& conv = model.layers()[0];
        const int wo = conv.out_shape.width, ho = conv.out_shape.height;
        const Vector x = oracles::random_vector(static_cast<std::size_t>(c * w * h), rng);

        // Duplication matrix: column per output position, row per kernel slot.
        const int kh = (k - 1) / 2;
        Matrix xbar(static_cast<std::size_t>(c * k * k), static_cast<std::size_t>(wo * ho));
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox)
                for (int ic = 0; ic < c; ++ic)
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx) {
                            const int iy = oy * stride + dy - kh;
                            const int ix = ox * stride + dx - kh;
                            double v = 0.0;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                v = x[conv.in_shape.at(ic, iy, ix)];
                            xbar(static_cast<std::size_t>((ic * k + dy) * k + dx),
                                 static_cast<std::size_t>(oy * wo + ox)) = v;
                        }
        const Matrix ybar = oracles::matmul_naive(conv.weight, xbar);

        lipkr::Trace trace;
        model.forward(x, trace);
        // Compare against the conv layer's own output (input of layer 1).
        const Vector& conv_out = trace.layers[1].input;
        for (int oc = 0; oc < l; ++oc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const double want = ybar(static_cast<std::size_t>(oc),
                                             static_cast<std::size_t>(oy * wo + ox)) +
                                        conv.bias[static_cast<std::size_t>(oc)];
                    REQUIRE_THAT(conv_out[conv.out_shape.at(oc, oy, ox)],
                                 Catch::Matchers::WithinAbs(want, 1e-10));
                }
    }
}

TEST_CASE("3x3 averaging kernel keeps a constant image constant in the interior") {
    Model model(TensorShape::map(1, 5, 5), {LayerSpec::conv2d(1, 3), LayerSpec::dense(1)},
                NormalizationMode::spectral);
    auto& conv = model.layers()[0];
    for (auto& v : conv.weight.data()) v = 1.0 / 9.0;
    const Vector x(25, 2.0);
    lipkr::Trace trace;
    model.forward(x, trace);
    const Vector& out = trace.layers[1].input;
    for (int y = 1; y < 4; ++y)
        for (int xx = 1; xx < 4; ++xx)
            REQUIRE_THAT(out[conv.out_shape.at(0, y, xx)], Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("backward of a linear model returns the weight row") {
    Model model(TensorShape::flat(3), {LayerSpec::dense(1)}, NormalizationMode::spectral);
    model.layers()[0].weight = Matrix(1, 3, {0.2, -0.4, 0.9});
    const auto rep = model.backward(Vector{1.0, 2.0, 3.0}, Vector{1.0});
    REQUIRE(rep.input_grad == Vector{0.2, -0.4, 0.9});
}

TEST_CASE("groupsort backward routes through the forward permutation") {
    Model model(TensorShape::flat(2), {LayerSpec::dense(2), LayerSpec::groupsort(2)},
                NormalizationMode::spectral);
    model.layers()[0].weight = Matrix::identity(2);
    const auto rep = model.backward(Vector{3.0, 1.0}, Vector{1.0, 0.0});
    REQUIRE(rep.input_grad == Vector{0.0, 1.0});
}

TEST_CASE("analytic gradients match central finite differences on mixed stacks") {
    struct Config {
        std::vector<LayerSpec> specs;
        int input_dim;
    };
    const std::vector<Config> configs = {
        {{LayerSpec::dense(6), LayerSpec::groupsort(2), LayerSpec::dense(2)}, 5},
        {{LayerSpec::dense(8), LayerSpec::fullsort(), LayerSpec::dense(3)}, 4},
        {{LayerSpec::dense(6), LayerSpec::const_prelu(0.5), LayerSpec::dense(1)}, 3},
        {{LayerSpec::dense(8), LayerSpec::pnorm_pool(2), LayerSpec::dense(2)}, 5},
        {{LayerSpec::dense(8), LayerSpec::maxpool(2), LayerSpec::dense(2)}, 5},
        {{LayerSpec::dense(8), LayerSpec::avgpool(2), LayerSpec::dense(2)}, 5},
    };
    Rng rng(2024);
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        Model model = make_dense_model(configs[ci].specs, configs[ci].input_dim,
                                       NormalizationMode::spectral, 500 + ci);
        const Vector x = oracles::random_vector(static_cast<std::size_t>(configs[ci].input_dim), rng);
        Vector upstream(static_cast<std::size_t>(model.output_count()));
        for (auto& u : upstream) u = rng.normal();

        const auto rep = model.backward(x, upstream);

        for (std::size_t i = 0; i < x.size(); ++i) {
            const double fd = oracles::central_difference(
                [&](double xi) {
                    Vector probe = x;
                    probe[i] = xi;
                    return weighted_output(model, probe, upstream);
                },
                x[i]);
            REQUIRE_THAT(rep.input_grad[i],
                         Catch::Matchers::WithinAbs(fd, 1e-4 * std::max(1.0, std::abs(fd))));
        }

        for (std::size_t li = 0; li < model.layers().size(); ++li) {
            if (!model.layers()[li].has_params()) continue;
            auto& w = model.layers()[li].weight;
            for (int probe_count = 0; probe_count < 6; ++probe_count) {
                const std::size_t idx = rng.next_below(w.data().size());
                const double w0 = w.data()[idx];
                const double fd = oracles::central_difference(
                    [&](double wi) {
                        w.data()[idx] = wi;
                        const double v = weighted_output(model, x, upstream);
                        w.data()[idx] = w0;
                        return v;
                    },
                    w0);
                REQUIRE_THAT(rep.weight_grads[li].data()[idx],
                             Catch::Matchers::WithinAbs(fd, 1e-4 * std::max(1.0, std::abs(fd))));
            }
        }
    }
}

TEST_CASE("conv model gradients match finite differences") {
    Model model(TensorShape::map(2, 4, 4),
                {LayerSpec::conv2d(4, 3), LayerSpec::groupsort(2), LayerSpec::avgpool(2),
                 LayerSpec::dense(2)},
                NormalizationMode::spectral);
    Rng rng(31);
    model.init_weights(rng);
    const Vector x = oracles::random_vector(32, rng);
    const Vector upstream{0.7, -0.3};
    const auto rep = model.backward(x, upstream);
    for (std::size_t i = 0; i < x.size(); i += 3) {
        const double fd = oracles::central_difference(
            [&](double xi) {
                Vector probe = x;
                probe[i] = xi;
                return weighted_output(model, probe, upstream);
            },
            x[i]);
        REQUIRE_THAT(rep.input_grad[i],
                     Catch::Matchers::WithinAbs(fd, 1e-4 * std::max(1.0, std::abs(fd))));
    }
    auto& w = model.layers()[0].weight;
    for (int probe_count = 0; probe_count < 8; ++probe_count) {
        const std::size_t idx = rng.next_below(w.data().size());
        const double w0 = w.data()[idx];
        const double fd = oracles::central_difference(
            [&](double wi) {
                w.data()[idx] = wi;
                const double v = weighted_output(model, x, upstream);
                w.data()[idx] = w0;
                return v;
            },
            w0);
        REQUIRE_THAT(rep.weight_grads[0].data()[idx],
                     Catch::Matchers::WithinAbs(fd, 1e-4 * std::max(1.0, std::abs(fd))));
    }
}

TEST_CASE("sort layers are exact isometries inside a model") {
    Model model(TensorShape::flat(8), {LayerSpec::dense(8), LayerSpec::groupsort(2)},
                NormalizationMode::spectral);
    Rng rng(5);
    model.init_weights(rng);
    for (int rep = 0; rep < 50; ++rep) {
        const Vector x = oracles::random_vector(8, rng);
        lipkr::Trace trace;
        const Vector out = model.forward(x, trace);
        REQUIRE(lipkr::l2_norm(out) == lipkr::l2_norm(trace.layers[1].input));
    }
}

TEST_CASE("normalize_weights: dense 2I becomes I") {
    Model model(TensorShape::flat(3), {LayerSpec::dense(3)}, NormalizationMode::spectral);
    model.layers()[0].weight = Matrix::identity(3) * 2.0;
    Rng rng(6);
    model.normalize_weights(NormalizationParams{}, rng);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE_THAT(model.layers()[0].weight(i, j),
                         Catch::Matchers::WithinAbs(i == j ? 1.0 : 0.0, 1e-12));
}

TEST_CASE("normalize_weights is idempotent within 1e-8") {
    for (auto mode : {NormalizationMode::spectral, NormalizationMode::bjorck}) {
        Model model = make_dense_model(
            {LayerSpec::dense(12), LayerSpec::groupsort(2), LayerSpec::dense(12),
             LayerSpec::groupsort(2), LayerSpec::dense(1)},
            6, mode, 91);
        Rng rng(92);
        model.normalize_weights(NormalizationParams{}, rng);
        std::vector<Vector> snapshot;
        for (const auto& layer : model.layers())
            if (layer.has_params()) snapshot.push_back(layer.weight.data());
        model.normalize_weights(NormalizationParams{}, rng);
        std::size_t si = 0;
        for (const auto& layer : model.layers()) {
            if (!layer.has_params()) continue;
            const Vector& before = snapshot[si++];
            for (std::size_t i = 0; i < before.size(); ++i)
                REQUIRE_THAT(layer.weight.data()[i], Catch::Matchers::WithinAbs(before[i], 1e-8));
        }
    }
}

TEST_CASE("normalize_weights enforces the per-layer sigma invariant") {
    Model model = make_dense_model(
        {LayerSpec::dense(10), LayerSpec::groupsort(2), LayerSpec::dense(10), LayerSpec::dense(2)},
        4, NormalizationMode::spectral, 93);
    // Blow the scales up first.
    for (auto& layer : model.layers())
        if (layer.has_params()) layer.weight *= 7.0;
    Rng rng(94);
    model.normalize_weights(NormalizationParams{}, rng);
    for (const auto& layer : model.layers()) {
        if (!layer.has_params()) continue;
        REQUIRE(oracles::svd_sigma_max(layer.weight) <= 1.0 + 1e-5);
    }
    // Output rows are unit-norm.
    const auto& last = model.layers().back();
    for (std::size_t r = 0; r < last.weight.rows(); ++r)
        REQUIRE_THAT(lipkr::l2_norm(last.weight.row(r)), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("bjorck-mode dense layers get orthonormal within 1e-4") {
    Model model = make_dense_model(
        {LayerSpec::dense(8), LayerSpec::groupsort(2), LayerSpec::dense(8), LayerSpec::dense(1)}, 8,
        NormalizationMode::bjorck, 95);
    Rng rng(96);
    model.normalize_weights(NormalizationParams{}, rng);
    for (std::size_t li = 0; li + 1 < model.layers().size(); ++li) {
        const auto& layer = model.layers()[li];
        if (!layer.has_params()) continue;
        REQUIRE(lipkr::gram_residual(layer.weight) < 1e-4);
    }
}

TEST_CASE("normalize_weights divides conv kernels by the geometry factor") {
    Model model(TensorShape::map(1, 5, 5), {LayerSpec::conv2d(4, 3), LayerSpec::dense(1)},
                NormalizationMode::spectral);
    Rng rng(97);
    model.init_weights(rng);
    model.normalize_weights(NormalizationParams{}, rng);
    const double lambda = lipkr::conv_lipschitz_factor(
        lipkr::ConvGeometry::same(3, 1, 5, 5, 1, 4));
    const double sigma = oracles::svd_sigma_max(model.layers()[0].weight);
    REQUIRE_THAT(sigma, Catch::Matchers::WithinRel(1.0 / lambda, 1e-5));
}

TEST_CASE("normalize_weights rejects an all-zero layer") {
    Model model(TensorShape::flat(3), {LayerSpec::dense(2), LayerSpec::dense(1)},
                NormalizationMode::spectral);
    Rng rng(98);
    REQUIRE_THROWS_AS(model.normalize_weights(NormalizationParams{}, rng), std::runtime_error);
}

TEST_CASE("model JSON round trip is bit exact and reproduces outputs") {
    Model model = make_dense_model(
        {LayerSpec::dense(9), LayerSpec::groupsort(2), LayerSpec::const_prelu(-0.25),
         LayerSpec::dense(3)},
        4, NormalizationMode::bjorck, 99);
    const std::string text = lipkr::model_to_string(model);
    const Model back = lipkr::model_from_string(text);
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        if (!model.layers()[li].has_params()) continue;
        REQUIRE(model.layers()[li].weight.data() == back.layers()[li].weight.data());
        REQUIRE(model.layers()[li].bias == back.layers()[li].bias);
    }
    Rng rng(100);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector x = oracles::random_vector(4, rng);
        REQUIRE(model.forward(x) == back.forward(x));
    }
}

TEST_CASE("model JSON without a version field is rejected") {
    auto doc = lipkr::model_to_json(make_dense_model({LayerSpec::dense(1)}, 2,
                                                     NormalizationMode::spectral, 1));
    doc.erase("version");
    REQUIRE_THROWS_AS(lipkr::model_from_json(doc), std::runtime_error);
}

TEST_CASE("fullsort layer rejects feature-map inputs") {
    REQUIRE_THROWS_AS(Model(TensorShape::map(2, 4, 4), {LayerSpec::fullsort()},
                            NormalizationMode::spectral),
                      std::invalid_argument);
}

TEST_CASE("channel groupsort on maps sorts channel pairs per pixel") {
    Model model(TensorShape::map(2, 2, 2),
                {LayerSpec::conv2d(2, 1), LayerSpec::groupsort(2), LayerSpec::dense(1)},
                NormalizationMode::spectral);
    // 1x1 conv = per-channel mixing; set it to the identity mixing.
    auto& conv = model.layers()[0];
    conv.weight(0, 0) = 1.0;
    conv.weight(0, 1) = 0.0;
    conv.weight(1, 0) = 0.0;
    conv.weight(1, 1) = 1.0;
    // Input: channel 0 all 5, channel 1 all 2 -> sorted pairs put 2 first.
    Vector x = {5, 5, 5, 5, 2, 2, 2, 2};
    lipkr::Trace trace;
    model.forward(x, trace);
    const Vector& sorted = trace.layers[2].input;
    for (int i = 0; i < 4; ++i) {
        REQUIRE(sorted[static_cast<std::size_t>(i)] == 2.0);
        REQUIRE(sorted[static_cast<std::size_t>(4 + i)] == 5.0);
    }
}
