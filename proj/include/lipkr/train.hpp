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

#ifndef LIPKR_TRAIN_HPP
#define LIPKR_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lipkr/config.hpp"
#include "lipkr/datasets.hpp"
#include "lipkr/losses.hpp"
#include "lipkr/model.hpp"
#include "lipkr/robustness.hpp"
#include "lipkr/spectral.hpp"

namespace lipkr {

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double kr = 0.0;
    double hinge = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    Model model;
    Dataset dataset;
    std::vector<EpochStats> history;
};

inline Dataset build_dataset(const ExperimentConfig& cfg) {
    const auto& d = cfg.dataset;
    if (d.name == "two_moons") return two_moons(d.n, d.noise, cfg.dataset_seed());
    if (d.name == "separated_clusters") return separated_clusters(d.n, d.gap, cfg.dataset_seed());
    if (d.name == "csv") {
        std::ifstream in(d.path);
        if (!in) throw std::runtime_error("build_dataset: cannot open " + d.path);
        return load_csv(in);
    }
    throw std::invalid_argument("build_dataset: unknown dataset '" + d.name + "'");
}

inline Model build_model(const ExperimentConfig& cfg, int input_dim) {
    std::vector<LayerSpec> specs;
    for (int width : cfg.model.hidden) {
        specs.push_back(LayerSpec::dense(width));
        if (cfg.model.activation == "groupsort2")
            specs.push_back(LayerSpec::groupsort(2));
        else if (cfg.model.activation == "fullsort")
            specs.push_back(LayerSpec::fullsort());
        else if (cfg.model.activation == "const_prelu")
            specs.push_back(LayerSpec::const_prelu(cfg.model.alpha));
        else
            throw std::invalid_argument("build_model: unknown activation '" + cfg.model.activation +
                                        "'");
    }
    specs.push_back(LayerSpec::dense(cfg.model.outputs));
    return Model(TensorShape::flat(input_dim), specs, cfg.model.normalization_mode);
}

namespace detail {

struct AdamState {
    Matrix m_w, v_w;
    Vector m_b, v_b;
};

struct Adam {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int step_count = 0;
    std::vector<AdamState> states;

    void init(const Model& model) {
        states.clear();
        for (const auto& layer : model.layers()) {
            AdamState s;
            if (layer.has_params()) {
                s.m_w = Matrix(layer.weight.rows(), layer.weight.cols());
                s.v_w = Matrix(layer.weight.rows(), layer.weight.cols());
                s.m_b.assign(layer.bias.size(), 0.0);
                s.v_b.assign(layer.bias.size(), 0.0);
            }
            states.push_back(std::move(s));
        }
    }

    void update(Model& model, const std::vector<Matrix>& wgrads, const std::vector<Vector>& bgrads) {
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, step_count);
        const double bc2 = 1.0 - std::pow(beta2, step_count);
        for (std::size_t li = 0; li < model.layers().size(); ++li) {
            Layer& layer = model.layers()[li];
            if (!layer.has_params()) continue;
            AdamState& s = states[li];
            auto& w = layer.weight.data();
            const auto& gw = wgrads[li].data();
            auto& mw = s.m_w.data();
            auto& vw = s.v_w.data();
            for (std::size_t i = 0; i < w.size(); ++i) {
                mw[i] = beta1 * mw[i] + (1.0 - beta1) * gw[i];
                vw[i] = beta2 * vw[i] + (1.0 - beta2) * gw[i] * gw[i];
                w[i] -= learning_rate * (mw[i] / bc1) / (std::sqrt(vw[i] / bc2) + eps);
            }
            for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                s.m_b[i] = beta1 * s.m_b[i] + (1.0 - beta1) * bgrads[li][i];
                s.v_b[i] = beta2 * s.v_b[i] + (1.0 - beta2) * bgrads[li][i] * bgrads[li][i];
                layer.bias[i] -=
                    learning_rate * (s.m_b[i] / bc1) / (std::sqrt(s.v_b[i] / bc2) + eps);
            }
        }
    }
};

// Tape through the weight normalization of one dense layer, for the exact
// differentiate-through-normalization training mode (order-1 Bjorck only).
struct NormalizationTape {
    enum class Kind { row_normalize, spectral, bjorck } kind = Kind::spectral;
    // spectral / bjorck pre-scale
    bool prescaled = false;
    double sigma = 1.0;
    Vector left, right;
    // bjorck iterates W_0 .. W_{T-1} (inputs of each iteration)
    std::vector<Matrix> iterates;
    // row_normalize
    Vector row_norms;
};

inline Matrix bjorck_step(const Matrix& w) {
    // W <- 1.5 W - 0.5 W W^T W
    Matrix www = matmul(w, matmul(transpose(w), w));
    Matrix out = w * 1.5;
    out -= 0.5 * www;
    return out;
}

inline Matrix normalize_with_tape(const Matrix& raw, bool is_output_layer, NormalizationMode mode,
                                  const NormalizationParams& params, Rng& rng, Vector& warm,
                                  NormalizationTape& tape) {
    if (is_output_layer) {
        tape.kind = NormalizationTape::Kind::row_normalize;
        Matrix out = raw;
        tape.row_norms.assign(raw.rows(), 0.0);
        for (std::size_t r = 0; r < raw.rows(); ++r) {
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < raw.cols(); ++j) norm_sq += raw(r, j) * raw(r, j);
            if (norm_sq == 0.0)
                throw std::runtime_error("normalize_with_tape: degenerate (all-zero) output row");
            const double norm = std::sqrt(norm_sq);
            tape.row_norms[r] = norm;
            for (std::size_t j = 0; j < raw.cols(); ++j) out(r, j) /= norm;
        }
        return out;
    }

    Vector start = warm.size() == raw.cols() ? warm : rng.unit_vector(raw.cols());
    SpectralEstimate est =
        power_iteration_from(raw, params.power_iters, params.power_tol, std::move(start));
    warm = est.right_vec;
    if (est.sigma <= 0.0)
        throw std::runtime_error("normalize_with_tape: degenerate (all-zero) layer");
    tape.sigma = est.sigma;
    tape.left = est.left_vec;
    tape.right = est.right_vec;

    if (mode == NormalizationMode::spectral) {
        tape.kind = NormalizationTape::Kind::spectral;
        tape.prescaled = true;
        Matrix out = raw;
        out *= 1.0 / est.sigma;
        return out;
    }

    tape.kind = NormalizationTape::Kind::bjorck;
    if (params.bjorck_order != 1)
        throw std::invalid_argument(
            "differentiate constraint mode supports bjorck_order == 1 only");
    Matrix cur = raw;
    if (est.sigma > 1.0) {
        tape.prescaled = true;
        cur *= 1.0 / est.sigma;
    }
    tape.iterates.clear();
    for (int t = 0; t < params.bjorck_iters; ++t) {
        tape.iterates.push_back(cur);
        cur = bjorck_step(cur);
    }
    return cur;
}

inline Matrix backprop_spectral_prescale(const NormalizationTape& tape, const Matrix& raw_scaled,
                                         const Matrix& grad) {
    // W_s = W / sigma, d sigma = u^T dW v:
    //   G_raw = G / sigma - (<G, W_s> / sigma) u v^T
    const double inner = dot(grad.data(), raw_scaled.data());
    Matrix out = grad * (1.0 / tape.sigma);
    const double c = inner / tape.sigma;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) -= c * tape.left[i] * tape.right[j];
    return out;
}

inline Matrix backprop_normalization(const NormalizationTape& tape, const Matrix& raw,
                                     const Matrix& effective, const Matrix& grad) {
    switch (tape.kind) {
        case NormalizationTape::Kind::row_normalize: {
            Matrix out(grad.rows(), grad.cols());
            for (std::size_t r = 0; r < grad.rows(); ++r) {
                double inner = 0.0;
                for (std::size_t j = 0; j < grad.cols(); ++j) inner += grad(r, j) * effective(r, j);
                for (std::size_t j = 0; j < grad.cols(); ++j)
                    out(r, j) = (grad(r, j) - inner * effective(r, j)) / tape.row_norms[r];
            }
            return out;
        }
        case NormalizationTape::Kind::spectral:
            return backprop_spectral_prescale(tape, effective, grad);
        case NormalizationTape::Kind::bjorck: {
            Matrix g = grad;
            for (std::size_t t = tape.iterates.size(); t-- > 0;) {
                const Matrix& w = tape.iterates[t];
                // VJP of W' = 1.5 W - 0.5 W W^T W
                Matrix gram = matmul(transpose(w), w);
                Matrix term1 = matmul(g, gram);
                Matrix term2 = matmul(w, matmul(transpose(g), w));
                Matrix term3 = matmul(w, matmul(transpose(w), g));
                Matrix next = g * 1.5;
                next -= 0.5 * (term1 + term2 + term3);
                g = std::move(next);
            }
            if (tape.prescaled) {
                // The pre-scale output raw / sigma is the first iterate (or,
                // with zero iterations, the effective matrix itself).
                const Matrix& scaled = tape.iterates.empty() ? effective : tape.iterates.front();
                return backprop_spectral_prescale(tape, scaled, g);
            }
            (void)raw;
            return g;
        }
    }
    throw std::logic_error("backprop_normalization: unknown tape kind");
}

struct BatchPlan {
    std::vector<std::vector<std::size_t>> batches;
};

// Stratified batches: every class contributes batch_size / num_classes
// examples to each batch, so per-class means are always defined.
inline BatchPlan stratified_batches(const std::vector<int>& labels,
                                    const std::vector<int>& class_values, int batch_size,
                                    Rng& rng) {
    const std::size_t q = class_values.size();
    const int per_class = batch_size / static_cast<int>(q);
    if (per_class < 1)
        throw std::invalid_argument("train: batch_size smaller than the number of classes");
    std::vector<std::vector<std::size_t>> pools(q);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t k = 0; k < q; ++k)
            if (labels[i] == class_values[k]) pools[k].push_back(i);
    }
    std::size_t min_count = labels.size();
    for (auto& pool : pools) {
        if (pool.empty()) throw std::invalid_argument("train: a class is absent from the dataset");
        rng.shuffle(pool);
        min_count = std::min(min_count, pool.size());
    }
    const std::size_t num_batches = min_count / static_cast<std::size_t>(per_class);
    BatchPlan plan;
    for (std::size_t b = 0; b < num_batches; ++b) {
        std::vector<std::size_t> batch;
        for (std::size_t k = 0; k < q; ++k)
            for (int t = 0; t < per_class; ++t)
                batch.push_back(pools[k][b * static_cast<std::size_t>(per_class) +
                                         static_cast<std::size_t>(t)]);
        plan.batches.push_back(std::move(batch));
    }
    return plan;
}

}  // namespace detail

/// Full-dataset loss/accuracy snapshot of a (normalized) model.
inline EpochStats evaluate_model(const Model& model, const Dataset& ds, const LossConfig& loss) {
    EpochStats stats;
    const std::size_t n = ds.points.size();
    if (loss.class_count == 1) {
        Vector scores(n);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = model.forward(ds.points[i])[0];
            if (predicted_label(model, {scores[i]}) == ds.labels[i]) ++correct;
        }
        const BinaryLossResult res = hkr_loss(scores, ds.labels, loss);
        stats.loss = res.total;
        stats.kr = res.kr;
        stats.hinge = res.hinge;
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    } else {
        Matrix scores(n, static_cast<std::size_t>(loss.class_count));
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vector s = model.forward(ds.points[i]);
            for (std::size_t k = 0; k < s.size(); ++k) scores(i, k) = s[k];
            if (predicted_label(model, s) == ds.labels[i]) ++correct;
        }
        const MulticlassLossResult res = hkr_multiclass_loss(scores, ds.labels, loss);
        stats.loss = res.total;
        stats.kr = res.kr;
        stats.hinge = res.hinge;
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    }
    return stats;
}

/// Minibatch hKR training. Weights are re-projected onto the Lipschitz
/// constraint set after every optimizer step (default), or the normalization
/// map itself is differentiated and the raw weights updated
/// (ConstraintMode::differentiate, dense-only stacks). Deterministic for a
/// fixed config.
inline TrainResult train(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset ds = build_dataset(cfg);
    Model model = build_model(cfg, ds.dimension);

    Rng init_rng(cfg.seed);
    Rng train_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    model.init_weights(init_rng);

    const bool differentiate = cfg.constraint_mode == ConstraintMode::differentiate;
    if (differentiate) {
        for (const auto& layer : model.layers())
            if (layer.spec.kind == LayerKind::conv2d)
                throw std::invalid_argument(
                    "train: differentiate constraint mode supports dense-only models");
    } else {
        model.normalize_weights(cfg.normalization, train_rng);
    }

    std::vector<int> class_values;
    if (cfg.loss.class_count == 1) {
        class_values = {1, -1};
    } else {
        for (int k = 0; k < cfg.loss.class_count; ++k) class_values.push_back(k);
    }

    detail::Adam adam;
    adam.learning_rate = cfg.optimizer.learning_rate;
    if (cfg.optimizer.kind != "adam")
        throw std::invalid_argument("train: unknown optimizer '" + cfg.optimizer.kind + "'");
    adam.init(model);

    const int out_idx = model.output_dense_index();
    TrainResult result;

    for (int epoch = 0; epoch < cfg.optimizer.epochs; ++epoch) {
        const detail::BatchPlan plan = detail::stratified_batches(
            ds.labels, class_values, cfg.optimizer.batch_size, train_rng);
        for (const auto& batch : plan.batches) {
            // Effective (constraint-satisfying) weights for this step.
            Model* eval_model = &model;
            Model effective;
            std::vector<detail::NormalizationTape> tapes;
            if (differentiate) {
                effective = model;
                tapes.resize(model.layers().size());
                for (std::size_t li = 0; li < model.layers().size(); ++li) {
                    Layer& layer = effective.layers()[li];
                    if (!layer.has_params()) continue;
                    layer.weight = detail::normalize_with_tape(
                        model.layers()[li].weight, static_cast<int>(li) == out_idx,
                        cfg.model.normalization_mode, cfg.normalization, train_rng,
                        model.layers()[li].warm_right, tapes[li]);
                }
                eval_model = &effective;
            }

            // Accumulate parameter gradients of the batch loss.
            std::vector<Matrix> wgrads(model.layers().size());
            std::vector<Vector> bgrads(model.layers().size());
            for (std::size_t li = 0; li < model.layers().size(); ++li) {
                const Layer& layer = model.layers()[li];
                if (!layer.has_params()) continue;
                wgrads[li] = Matrix(layer.weight.rows(), layer.weight.cols());
                bgrads[li].assign(layer.bias.size(), 0.0);
            }

            const std::size_t bsz = batch.size();
            std::vector<Trace> traces(bsz);
            std::vector<Vector> scores(bsz);
            for (std::size_t b = 0; b < bsz; ++b)
                scores[b] = eval_model->forward(ds.points[batch[b]], traces[b]);

            std::vector<Vector> upstreams(bsz);
            double batch_loss = 0.0;
            if (cfg.loss.class_count == 1) {
                Vector flat(bsz);
                std::vector<int> labels(bsz);
                for (std::size_t b = 0; b < bsz; ++b) {
                    flat[b] = scores[b][0];
                    labels[b] = ds.labels[batch[b]];
                }
                const BinaryLossResult res = hkr_loss(flat, labels, cfg.loss);
                batch_loss = res.total;
                for (std::size_t b = 0; b < bsz; ++b) upstreams[b] = {res.score_grads[b]};
            } else {
                Matrix score_mat(bsz, static_cast<std::size_t>(cfg.loss.class_count));
                std::vector<int> labels(bsz);
                for (std::size_t b = 0; b < bsz; ++b) {
                    for (std::size_t k = 0; k < scores[b].size(); ++k) score_mat(b, k) = scores[b][k];
                    labels[b] = ds.labels[batch[b]];
                }
                const MulticlassLossResult res = hkr_multiclass_loss(score_mat, labels, cfg.loss);
                batch_loss = res.total;
                for (std::size_t b = 0; b < bsz; ++b) upstreams[b] = res.score_grads.row(b);
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch));

            for (std::size_t b = 0; b < bsz; ++b) {
                const GradientReport rep = eval_model->backward(traces[b], upstreams[b]);
                for (std::size_t li = 0; li < model.layers().size(); ++li) {
                    if (!model.layers()[li].has_params()) continue;
                    wgrads[li] += rep.weight_grads[li];
                    for (std::size_t k = 0; k < bgrads[li].size(); ++k)
                        bgrads[li][k] += rep.bias_grads[li][k];
                }
            }

            if (differentiate) {
                for (std::size_t li = 0; li < model.layers().size(); ++li) {
                    if (!model.layers()[li].has_params()) continue;
                    wgrads[li] = detail::backprop_normalization(
                        tapes[li], model.layers()[li].weight, effective.layers()[li].weight,
                        wgrads[li]);
                }
            }

            adam.update(model, wgrads, bgrads);
            if (!differentiate) model.normalize_weights(cfg.normalization, train_rng);
        }

        Model* report_model = &model;
        Model exported;
        if (differentiate) {
            exported = model;
            exported.normalize_weights(cfg.normalization, train_rng);
            report_model = &exported;
        }
        EpochStats stats = evaluate_model(*report_model, ds, cfg.loss);
        stats.epoch = epoch;
        if (!std::isfinite(stats.loss))
            throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                                     std::to_string(epoch));
        result.history.push_back(stats);
    }

    if (differentiate) model.normalize_weights(cfg.normalization, train_rng);
    result.model = std::move(model);
    result.dataset = std::move(ds);
    return result;
}

inline void save_history_csv(const std::vector<EpochStats>& history, std::ostream& out) {
    out << "epoch,loss,kr,hinge,accuracy\n";
    char buf[160];
    for (const auto& s : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", s.epoch, s.loss, s.kr,
                      s.hinge, s.accuracy);
        out << buf;
    }
}

}  // namespace lipkr

#endif  // LIPKR_TRAIN_HPP
