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

#ifndef LIPKR_LOSSES_HPP
#define LIPKR_LOSSES_HPP

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipkr/matrix.hpp"

namespace lipkr {

/// Configuration of the hinge-regularized KR loss family.
struct LossConfig {
    double lambda = 0.0;  // hinge weight, >= 0
    double margin = 1.0;  // hinge margin m, > 0
    int class_count = 1;  // 1 = binary (+1/-1 labels), >= 2 = one-vs-all

    void validate() const {
        if (lambda < 0.0) throw std::invalid_argument("LossConfig: lambda must be >= 0");
        if (margin <= 0.0) throw std::invalid_argument("LossConfig: margin must be > 0");
        if (class_count < 1) throw std::invalid_argument("LossConfig: class_count must be >= 1");
    }
};

namespace detail {

inline void check_binary_batch(const Vector& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("loss: scores and labels must have equal length");
    if (scores.empty()) throw std::invalid_argument("loss: empty batch");
    for (int y : labels)
        if (y != 1 && y != -1)
            throw std::invalid_argument("loss: binary labels must be +1 or -1");
}

}  // namespace detail

/// KR term: mean score over the negative class minus mean score over the
/// positive class. Minimizing it spreads the two conditional score
/// distributions apart. Both classes must be present.
inline double kr_term(const Vector& scores, const std::vector<int>& labels) {
    detail::check_binary_batch(scores, labels);
    double sum_pos = 0.0, sum_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 1) {
            sum_pos += scores[i];
            ++n_pos;
        } else {
            sum_neg += scores[i];
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("kr_term: KR term undefined on a single-class batch");
    return sum_neg / static_cast<double>(n_neg) - sum_pos / static_cast<double>(n_pos);
}

/// Mean hinge penalty max(0, m - y f(x)) over the batch.
inline double hinge_term(const Vector& scores, const std::vector<int>& labels, double margin) {
    detail::check_binary_batch(scores, labels);
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        acc += std::max(0.0, margin - static_cast<double>(labels[i]) * scores[i]);
    return acc / static_cast<double>(scores.size());
}

struct BinaryLossResult {
    double total = 0.0;
    double kr = 0.0;
    double hinge = 0.0;
    Vector score_grads;  // subgradient w.r.t. each score
};

/// hKR loss: kr_term + lambda * hinge_term, with per-score subgradients.
/// At the hinge kink (m - y f == 0) the minimal-norm subgradient 0 is used,
/// so the result is deterministic.
inline BinaryLossResult hkr_loss(const Vector& scores, const std::vector<int>& labels,
                                 const LossConfig& cfg) {
    cfg.validate();
    detail::check_binary_batch(scores, labels);
    BinaryLossResult out;
    out.kr = kr_term(scores, labels);
    out.hinge = hinge_term(scores, labels, cfg.margin);
    out.total = out.kr + cfg.lambda * out.hinge;

    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    const double n = static_cast<double>(scores.size());
    out.score_grads.assign(scores.size(), 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double y = static_cast<double>(labels[i]);
        double g = labels[i] == 1 ? -1.0 / static_cast<double>(n_pos)
                                  : 1.0 / static_cast<double>(n_neg);
        if (cfg.margin - y * scores[i] > 0.0) g += cfg.lambda * (-y) / n;
        out.score_grads[i] = g;
    }
    return out;
}

struct MulticlassLossResult {
    double total = 0.0;
    double kr = 0.0;
    double hinge = 0.0;
    Matrix score_grads;  // n x q subgradients
};

/// Multi-class hKR: sum over the q one-vs-all binary problems,
///   sum_k [ mean_{y != k} f_k - mean_{y = k} f_k
///           + lambda * mean (m - s_k f_k)_+ ],  s_k = 2*1{y=k} - 1.
/// Every class must appear in the batch; otherwise the error lists the
/// missing ones.
inline MulticlassLossResult hkr_multiclass_loss(const Matrix& scores,
                                                const std::vector<int>& labels,
                                                const LossConfig& cfg) {
    cfg.validate();
    const std::size_t n = scores.rows();
    const std::size_t q = scores.cols();
    if (labels.size() != n)
        throw std::invalid_argument("hkr_multiclass_loss: scores and labels must match");
    if (n == 0) throw std::invalid_argument("hkr_multiclass_loss: empty batch");
    if (q != static_cast<std::size_t>(cfg.class_count))
        throw std::invalid_argument("hkr_multiclass_loss: score columns must equal class_count");

    std::vector<std::size_t> counts(q, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= q)
            throw std::invalid_argument("hkr_multiclass_loss: label out of range: " +
                                        std::to_string(y));
        ++counts[static_cast<std::size_t>(y)];
    }
    std::string missing;
    for (std::size_t k = 0; k < q; ++k)
        if (counts[k] == 0) missing += (missing.empty() ? "" : ", ") + std::to_string(k);
    if (!missing.empty())
        throw std::invalid_argument("hkr_multiclass_loss: classes absent from batch: " + missing);

    MulticlassLossResult out;
    out.score_grads = Matrix(n, q);
    const double nf = static_cast<double>(n);
    for (std::size_t k = 0; k < q; ++k) {
        const double n_own = static_cast<double>(counts[k]);
        const double n_rest = nf - n_own;
        if (n_rest == 0.0)
            throw std::invalid_argument("hkr_multiclass_loss: needs at least two classes present");
        double sum_own = 0.0, sum_rest = 0.0, hinge_acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool own = static_cast<std::size_t>(labels[i]) == k;
            const double f = scores(i, k);
            (own ? sum_own : sum_rest) += f;
            const double s = own ? 1.0 : -1.0;
            const double slack = cfg.margin - s * f;
            if (slack > 0.0) {
                hinge_acc += slack;
                out.score_grads(i, k) += cfg.lambda * (-s) / nf;
            }
            out.score_grads(i, k) += own ? -1.0 / n_own : 1.0 / n_rest;
        }
        out.kr += sum_rest / n_rest - sum_own / n_own;
        out.hinge += hinge_acc / nf;
    }
    out.total = out.kr + cfg.lambda * out.hinge;
    return out;
}

}  // namespace lipkr

#endif  // LIPKR_LOSSES_HPP
