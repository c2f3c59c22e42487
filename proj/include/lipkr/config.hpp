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

#ifndef LIPKR_CONFIG_HPP
#define LIPKR_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lipkr/losses.hpp"
#include "lipkr/model.hpp"

namespace lipkr {

struct DatasetSpec {
    std::string name = "two_moons";  // two_moons | separated_clusters | csv
    int n = 500;
    double noise = 0.05;
    double gap = 2.5;
    std::uint64_t seed = 0;  // filled from the experiment seed when omitted
    bool seed_overridden = false;
    std::string path;  // csv datasets
};

struct ModelSpec {
    std::vector<int> hidden = {64, 64, 64};
    std::string activation = "groupsort2";  // groupsort2 | fullsort | const_prelu
    double alpha = 0.7;                     // const_prelu slope
    NormalizationMode normalization_mode = NormalizationMode::bjorck;
    int outputs = 1;
};

struct OptimizerSpec {
    std::string kind = "adam";
    double learning_rate = 0.01;
    int batch_size = 64;
    int epochs = 200;
};

enum class ConstraintMode { project, differentiate };

/// Everything a reproducible run needs. The seed is mandatory; every other
/// field has a documented default.
struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    DatasetSpec dataset;
    ModelSpec model;
    LossConfig loss{10.0, 1.0, 1};
    OptimizerSpec optimizer;
    NormalizationParams normalization;
    ConstraintMode constraint_mode = ConstraintMode::project;
    std::string output_dir = ".";

    void validate() const {
        if (!seed_set) throw std::invalid_argument("config: seed is mandatory");
        if (dataset.n < 2) throw std::invalid_argument("config: dataset.n must be >= 2");
        if (optimizer.batch_size < 2) throw std::invalid_argument("config: batch_size must be >= 2");
        if (optimizer.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
        if (optimizer.learning_rate <= 0.0)
            throw std::invalid_argument("config: learning_rate must be positive");
        if (model.outputs < 1) throw std::invalid_argument("config: outputs must be >= 1");
        for (int h : model.hidden)
            if (h < 1) throw std::invalid_argument("config: hidden widths must be positive");
        if (normalization.power_iters < 1 || normalization.bjorck_iters < 0)
            throw std::invalid_argument("config: normalization iteration counts must be positive");
        loss.validate();
    }

    std::uint64_t dataset_seed() const { return dataset.seed_overridden ? dataset.seed : seed; }
};

// Config JSON schema (version 1); omitted fields take the defaults above,
// "seed" is required:
// {
//   "version": 1, "seed": 42,
//   "dataset": {"name", "n", "noise", "gap", "seed", "path"},
//   "model": {"hidden", "activation", "alpha", "normalization_mode", "outputs"},
//   "loss": {"lambda", "margin"},
//   "optimizer": {"kind", "learning_rate", "batch_size", "epochs"},
//   "normalization": {"power_iters", "power_tol", "bjorck_order", "bjorck_iters"},
//   "constraint_mode": "project" | "differentiate",
//   "output_dir": "out"
// }

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json doc;
    doc["version"] = cfg.version;
    doc["seed"] = cfg.seed;
    doc["dataset"] = {{"name", cfg.dataset.name}, {"n", cfg.dataset.n},
                      {"noise", cfg.dataset.noise}, {"gap", cfg.dataset.gap},
                      {"seed", cfg.dataset_seed()}, {"path", cfg.dataset.path}};
    doc["model"] = {{"hidden", cfg.model.hidden},
                    {"activation", cfg.model.activation},
                    {"alpha", cfg.model.alpha},
                    {"normalization_mode",
                     cfg.model.normalization_mode == NormalizationMode::bjorck ? "bjorck"
                                                                               : "spectral"},
                    {"outputs", cfg.model.outputs}};
    doc["loss"] = {{"lambda", cfg.loss.lambda}, {"margin", cfg.loss.margin}};
    doc["optimizer"] = {{"kind", cfg.optimizer.kind},
                        {"learning_rate", cfg.optimizer.learning_rate},
                        {"batch_size", cfg.optimizer.batch_size},
                        {"epochs", cfg.optimizer.epochs}};
    doc["normalization"] = {{"power_iters", cfg.normalization.power_iters},
                            {"power_tol", cfg.normalization.power_tol},
                            {"bjorck_order", cfg.normalization.bjorck_order},
                            {"bjorck_iters", cfg.normalization.bjorck_iters}};
    doc["constraint_mode"] =
        cfg.constraint_mode == ConstraintMode::project ? "project" : "differentiate";
    doc["output_dir"] = cfg.output_dir;
    return doc;
}

inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.contains("version")) throw std::runtime_error("config: missing required field 'version'");
    if (doc.at("version").get<int>() != 1)
        throw std::runtime_error("config: unsupported schema version");
    ExperimentConfig cfg;
    if (!doc.contains("seed")) throw std::runtime_error("config: missing required field 'seed'");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.seed_set = true;

    if (doc.contains("dataset")) {
        const auto& d = doc.at("dataset");
        if (d.contains("name")) cfg.dataset.name = d.at("name").get<std::string>();
        if (d.contains("n")) cfg.dataset.n = d.at("n").get<int>();
        if (d.contains("noise")) cfg.dataset.noise = d.at("noise").get<double>();
        if (d.contains("gap")) cfg.dataset.gap = d.at("gap").get<double>();
        if (d.contains("path")) cfg.dataset.path = d.at("path").get<std::string>();
        if (d.contains("seed")) {
            cfg.dataset.seed = d.at("seed").get<std::uint64_t>();
            cfg.dataset.seed_overridden = true;
        }
    }
    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        if (m.contains("hidden")) cfg.model.hidden = m.at("hidden").get<std::vector<int>>();
        if (m.contains("activation")) cfg.model.activation = m.at("activation").get<std::string>();
        if (m.contains("alpha")) cfg.model.alpha = m.at("alpha").get<double>();
        if (m.contains("outputs")) cfg.model.outputs = m.at("outputs").get<int>();
        if (m.contains("normalization_mode")) {
            const std::string name = m.at("normalization_mode").get<std::string>();
            if (name == "bjorck")
                cfg.model.normalization_mode = NormalizationMode::bjorck;
            else if (name == "spectral")
                cfg.model.normalization_mode = NormalizationMode::spectral;
            else
                throw std::runtime_error("config: unknown normalization_mode '" + name + "'");
        }
    }
    if (doc.contains("loss")) {
        const auto& l = doc.at("loss");
        if (l.contains("lambda")) cfg.loss.lambda = l.at("lambda").get<double>();
        if (l.contains("margin")) cfg.loss.margin = l.at("margin").get<double>();
    }
    cfg.loss.class_count = cfg.model.outputs;
    if (doc.contains("optimizer")) {
        const auto& o = doc.at("optimizer");
        if (o.contains("kind")) cfg.optimizer.kind = o.at("kind").get<std::string>();
        if (o.contains("learning_rate"))
            cfg.optimizer.learning_rate = o.at("learning_rate").get<double>();
        if (o.contains("batch_size")) cfg.optimizer.batch_size = o.at("batch_size").get<int>();
        if (o.contains("epochs")) cfg.optimizer.epochs = o.at("epochs").get<int>();
    }
    if (doc.contains("normalization")) {
        const auto& n = doc.at("normalization");
        if (n.contains("power_iters")) cfg.normalization.power_iters = n.at("power_iters").get<int>();
        if (n.contains("power_tol")) cfg.normalization.power_tol = n.at("power_tol").get<double>();
        if (n.contains("bjorck_order"))
            cfg.normalization.bjorck_order = n.at("bjorck_order").get<int>();
        if (n.contains("bjorck_iters"))
            cfg.normalization.bjorck_iters = n.at("bjorck_iters").get<int>();
    }
    if (doc.contains("constraint_mode")) {
        const std::string mode = doc.at("constraint_mode").get<std::string>();
        if (mode == "project")
            cfg.constraint_mode = ConstraintMode::project;
        else if (mode == "differentiate")
            cfg.constraint_mode = ConstraintMode::differentiate;
        else
            throw std::runtime_error("config: unknown constraint_mode '" + mode + "'");
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    nlohmann::json doc;
    in >> doc;
    return config_from_json(doc);
}

}  // namespace lipkr

#endif  // LIPKR_CONFIG_HPP
