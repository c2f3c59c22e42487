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

#ifndef LIPKR_SERIALIZE_HPP
#define LIPKR_SERIALIZE_HPP

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lipkr/model.hpp"

namespace lipkr {

// Model JSON schema (version 1):
// {
//   "version": 1,
//   "normalization_mode": "bjorck" | "spectral",
//   "input_shape": {"kind": "flat", "dim": d}
//                | {"kind": "map", "channels": c, "width": w, "height": h},
//   "layers": [
//     {"kind": "dense", "params": {"units": u}, "weights": [...], "bias": [...]},
//     {"kind": "conv2d", "params": {"out_channels": l, "kernel": k, "stride": s},
//      "weights": [...], "bias": [...]},
//     {"kind": "groupsort", "params": {"group": g}},
//     {"kind": "fullsort", "params": {}},
//     {"kind": "const_prelu", "params": {"alpha": a}},
//     {"kind": "pnorm_pool", "params": {"pool": p, "exponent": e, "mean_factor": b}},
//     {"kind": "maxpool"|"avgpool", "params": {"pool": p}}
//   ]
// }
// Weights are row-major; doubles round-trip bit-exactly (shortest-repr dtoa).

inline constexpr int kModelSchemaVersion = 1;

inline nlohmann::json model_to_json(const Model& model) {
    nlohmann::json doc;
    doc["version"] = kModelSchemaVersion;
    doc["normalization_mode"] =
        model.normalization_mode() == NormalizationMode::bjorck ? "bjorck" : "spectral";
    const TensorShape& in = model.input_shape();
    if (in.is_map()) {
        doc["input_shape"] = {{"kind", "map"},
                              {"channels", in.channels},
                              {"width", in.width},
                              {"height", in.height}};
    } else {
        doc["input_shape"] = {{"kind", "flat"}, {"dim", in.flat_dim}};
    }
    doc["layers"] = nlohmann::json::array();
    for (const auto& layer : model.layers()) {
        nlohmann::json entry;
        entry["kind"] = layer_kind_name(layer.spec.kind);
        nlohmann::json params = nlohmann::json::object();
        switch (layer.spec.kind) {
            case LayerKind::dense:
                params["units"] = layer.spec.units;
                break;
            case LayerKind::conv2d:
                params["out_channels"] = layer.spec.out_channels;
                params["kernel"] = layer.spec.kernel;
                params["stride"] = layer.spec.stride;
                break;
            case LayerKind::groupsort:
                params["group"] = layer.spec.group;
                break;
            case LayerKind::fullsort:
                break;
            case LayerKind::const_prelu:
                params["alpha"] = layer.spec.alpha;
                break;
            case LayerKind::pnorm_pool:
                params["pool"] = layer.spec.pool;
                params["exponent"] = layer.spec.exponent;
                params["mean_factor"] = layer.spec.mean_factor;
                break;
            case LayerKind::maxpool:
            case LayerKind::avgpool:
                params["pool"] = layer.spec.pool;
                break;
        }
        entry["params"] = params;
        if (layer.has_params()) {
            entry["weights"] = layer.weight.data();
            entry["bias"] = layer.bias;
        }
        doc["layers"].push_back(std::move(entry));
    }
    return doc;
}

inline std::string model_to_string(const Model& model) { return model_to_json(model).dump(2) + "\n"; }

inline Model model_from_json(const nlohmann::json& doc) {
    if (!doc.contains("version"))
        throw std::runtime_error("model: missing required field 'version'");
    if (doc.at("version").get<int>() != kModelSchemaVersion)
        throw std::runtime_error("model: unsupported schema version");
    const std::string mode_name = doc.at("normalization_mode").get<std::string>();
    NormalizationMode mode;
    if (mode_name == "bjorck")
        mode = NormalizationMode::bjorck;
    else if (mode_name == "spectral")
        mode = NormalizationMode::spectral;
    else
        throw std::runtime_error("model: unknown normalization_mode '" + mode_name + "'");

    const auto& shape = doc.at("input_shape");
    TensorShape input = shape.at("kind").get<std::string>() == "map"
                            ? TensorShape::map(shape.at("channels").get<int>(),
                                               shape.at("width").get<int>(),
                                               shape.at("height").get<int>())
                            : TensorShape::flat(shape.at("dim").get<int>());

    std::vector<LayerSpec> specs;
    for (const auto& entry : doc.at("layers")) {
        const std::string kind = entry.at("kind").get<std::string>();
        const auto& params = entry.at("params");
        if (kind == "dense") {
            specs.push_back(LayerSpec::dense(params.at("units").get<int>()));
        } else if (kind == "conv2d") {
            specs.push_back(LayerSpec::conv2d(params.at("out_channels").get<int>(),
                                              params.at("kernel").get<int>(),
                                              params.at("stride").get<int>()));
        } else if (kind == "groupsort") {
            specs.push_back(LayerSpec::groupsort(params.at("group").get<int>()));
        } else if (kind == "fullsort") {
            specs.push_back(LayerSpec::fullsort());
        } else if (kind == "const_prelu") {
            specs.push_back(LayerSpec::const_prelu(params.at("alpha").get<double>()));
        } else if (kind == "pnorm_pool") {
            specs.push_back(LayerSpec::pnorm_pool(params.at("pool").get<int>(),
                                                  params.at("exponent").get<double>(),
                                                  params.at("mean_factor").get<bool>()));
        } else if (kind == "maxpool") {
            specs.push_back(LayerSpec::maxpool(params.at("pool").get<int>()));
        } else if (kind == "avgpool") {
            specs.push_back(LayerSpec::avgpool(params.at("pool").get<int>()));
        } else {
            throw std::runtime_error("model: unknown layer kind '" + kind + "'");
        }
    }

    Model model(input, specs, mode);
    std::size_t li = 0;
    for (const auto& entry : doc.at("layers")) {
        Layer& layer = model.layers()[li++];
        if (!layer.has_params()) continue;
        const auto weights = entry.at("weights").get<Vector>();
        const auto bias = entry.at("bias").get<Vector>();
        if (weights.size() != layer.weight.data().size())
            throw std::runtime_error("model: weight size mismatch in layer " + std::to_string(li - 1));
        if (bias.size() != layer.bias.size())
            throw std::runtime_error("model: bias size mismatch in layer " + std::to_string(li - 1));
        assert_finite(weights, "model weights");
        assert_finite(bias, "model bias");
        layer.weight.data() = weights;
        layer.bias = bias;
    }
    return model;
}

inline Model model_from_string(const std::string& text) {
    return model_from_json(nlohmann::json::parse(text));
}

inline void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out << model_to_string(model);
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::json doc;
    in >> doc;
    return model_from_json(doc);
}

}  // namespace lipkr

#endif  // LIPKR_SERIALIZE_HPP
