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

#ifndef LIPKR_ROBUSTNESS_HPP
#define LIPKR_ROBUSTNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lipkr/matrix.hpp"
#include "lipkr/model.hpp"
#include "lipkr/rng.hpp"

namespace lipkr {

/// Certified L2 robustness of one prediction. For a binary model (q = 1)
/// the radius is |f(x)| when the sign matches the label; for q >= 2 it is
/// half the gap between the true-class score and the runner-up. A
/// misclassified point certifies radius 0.
struct Certificate {
    std::size_t index = 0;
    int predicted_label = 0;
    double certified_radius = 0.0;
    double score_margin = 0.0;
};

inline constexpr double kScoreInfinity = 1e300;

inline int predicted_label(const Model& model, const Vector& scores) {
    if (model.output_count() == 1) return scores[0] >= 0.0 ? 1 : -1;
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

inline Certificate certify(const Model& model, const Vector& x, int true_label,
                           std::size_t index = 0) {
    const Vector scores = model.forward(x);
    Certificate cert;
    cert.index = index;
    cert.predicted_label = predicted_label(model, scores);
    if (model.output_count() == 1) {
        cert.score_margin = static_cast<double>(true_label) * scores[0];
        cert.certified_radius = cert.predicted_label == true_label ? std::abs(scores[0]) : 0.0;
    } else {
        const std::size_t t = static_cast<std::size_t>(true_label);
        if (t >= scores.size()) throw std::invalid_argument("certify: label out of range");
        double runner_up = -kScoreInfinity;
        for (std::size_t k = 0; k < scores.size(); ++k)
            if (k != t) runner_up = std::max(runner_up, scores[k]);
        cert.score_margin = scores[t] - runner_up;
        cert.certified_radius = std::max(0.0, cert.score_margin) / 2.0;
    }
    return cert;
}

struct AttackResult {
    Vector perturbation;
    double l2_size = 0.0;
    bool success = false;
    int queries = 0;
    bool used_random_direction = false;
};

namespace detail {

// Attack objective: the quantity an L2 attack pushes down. Binary: sign(f0)*f.
// Multi-class: margin between the originally predicted class and the current
// runner-up (re-selected at the evaluation point).
struct AttackObjective {
    const Model& model;
    int base_label;  // prediction at the clean point

    // Gradient of the attacked margin at z; flipped = prediction changed at z.
    Vector gradient(const Vector& z, bool& flipped, int& queries) const {
        Trace trace;
        const Vector scores = model.forward(z, trace);
        ++queries;
        flipped = predicted_label(model, scores) != base_label;
        Vector upstream(scores.size(), 0.0);
        if (model.output_count() == 1) {
            upstream[0] = base_label >= 0 ? 1.0 : -1.0;
        } else {
            const std::size_t t = static_cast<std::size_t>(base_label);
            std::size_t runner = t == 0 ? 1 : 0;
            for (std::size_t k = 0; k < scores.size(); ++k)
                if (k != t && scores[k] > scores[runner]) runner = k;
            upstream[t] = 1.0;
            upstream[runner] = -1.0;
        }
        return model.backward(trace, upstream).input_grad;
    }
};

inline Vector random_ball_point(const Vector& center, double radius, Rng& rng) {
    const std::size_t d = center.size();
    Vector dir = rng.unit_vector(d);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    Vector out = center;
    axpy(out, r, dir);
    return out;
}

}  // namespace detail

/// One-step L2 gradient attack: x' = x - eps * sign(f(x)) grad f / |grad f|
/// for a binary model, and the margin-gradient step for q >= 2. A vanishing
/// gradient falls back to a seeded random unit direction and flags it.
inline AttackResult fgm_attack(const Model& model, const Vector& x, double eps, Rng& rng) {
    if (eps <= 0.0) throw std::invalid_argument("fgm_attack: eps must be positive");
    AttackResult res;
    const Vector scores = model.forward(x);
    res.queries = 1;
    detail::AttackObjective obj{model, predicted_label(model, scores)};
    bool flipped = false;
    Vector grad = obj.gradient(x, flipped, res.queries);
    double gn = l2_norm(grad);
    if (gn == 0.0) {
        grad = rng.unit_vector(x.size());
        gn = 1.0;
        res.used_random_direction = true;
    }
    Vector candidate = x;
    axpy(candidate, -eps / gn, grad);
    const Vector attacked_scores = model.forward(candidate);
    ++res.queries;
    res.success = predicted_label(model, attacked_scores) != obj.base_label;
    res.perturbation = candidate - x;
    res.l2_size = l2_norm(res.perturbation);
    return res;
}

/// Projected gradient descent in the L2 ball of radius eps around x.
/// Each step moves along the normalized margin gradient and projects back
/// onto the ball; the smallest flipping perturbation seen wins. Restart 0
/// starts at x, further restarts at random interior points.
inline AttackResult pgd_attack(const Model& model, const Vector& x, double eps, int steps,
                               double step_size, Rng& rng, int restarts = 3) {
    if (eps <= 0.0) throw std::invalid_argument("pgd_attack: eps must be positive");
    if (steps < 1) throw std::invalid_argument("pgd_attack: steps must be >= 1");
    if (step_size <= 0.0) throw std::invalid_argument("pgd_attack: step_size must be positive");
    if (restarts < 1) throw std::invalid_argument("pgd_attack: restarts must be >= 1");

    AttackResult res;
    const Vector scores = model.forward(x);
    res.queries = 1;
    detail::AttackObjective obj{model, predicted_label(model, scores)};

    double best_size = kScoreInfinity;
    Vector best_point;
    auto consider = [&](const Vector& z) {
        const double size = l2_distance(z, x);
        if (size < best_size) {
            best_size = size;
            best_point = z;
        }
    };

    for (int restart = 0; restart < restarts; ++restart) {
        Vector z = restart == 0 ? x : detail::random_ball_point(x, eps, rng);
        for (int step = 0; step < steps; ++step) {
            bool flipped = false;
            Vector grad = obj.gradient(z, flipped, res.queries);
            if (flipped) consider(z);
            double gn = l2_norm(grad);
            if (gn == 0.0) {
                grad = rng.unit_vector(x.size());
                gn = 1.0;
                res.used_random_direction = true;
            }
            axpy(z, -step_size / gn, grad);
            const double dist = l2_distance(z, x);
            if (dist > eps) {
                const double shrink = eps / dist;
                for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + (z[i] - x[i]) * shrink;
            }
        }
        const Vector final_scores = model.forward(z);
        ++res.queries;
        if (predicted_label(model, final_scores) != obj.base_label) consider(z);
    }

    if (best_size < kScoreInfinity) {
        res.success = true;
        res.perturbation = best_point - x;
        res.l2_size = best_size;
    } else {
        res.perturbation.assign(x.size(), 0.0);
        res.l2_size = 0.0;
    }
    return res;
}

struct PgdParams {
    int steps = 50;
    int restarts = 3;
    double step_fraction = 2.5;  // step_size = step_fraction * eps / steps
};

inline AttackResult pgd_attack(const Model& model, const Vector& x, double eps, Rng& rng,
                               const PgdParams& params = {}) {
    return pgd_attack(model, x, eps, params.steps, params.step_fraction * eps / params.steps, rng,
                      params.restarts);
}

struct MinAdvResult {
    double eps = 0.0;
    bool found = false;
    Vector adv_point;
};

/// Smallest flipping perturbation found by bisecting eps with a PGD inner
/// loop. `cap` bounds the search (callers typically pass a few data
/// diameters); when no flip is found at the cap the cap is reported with
/// found = false.
inline MinAdvResult min_adv_perturbation(const Model& model, const Vector& x, double tol,
                                         double cap, Rng& rng, const PgdParams& params = {}) {
    if (tol <= 0.0) throw std::invalid_argument("min_adv_perturbation: tol must be positive");
    if (cap <= 0.0) throw std::invalid_argument("min_adv_perturbation: cap must be positive");
    MinAdvResult out;
    out.eps = cap;

    AttackResult probe = pgd_attack(model, x, cap, rng, params);
    if (!probe.success) return out;
    double hi = probe.l2_size;  // known-successful radius
    Vector hi_point = x + probe.perturbation;
    double lo = 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= 0.0) break;
        AttackResult att = pgd_attack(model, x, mid, rng, params);
        if (att.success && att.l2_size < hi) {
            hi = att.l2_size;
            hi_point = x + att.perturbation;
        } else if (!att.success) {
            lo = mid;
        } else {
            break;  // success but no improvement; interval is resolved
        }
    }
    out.eps = hi;
    out.found = true;
    out.adv_point = std::move(hi_point);
    return out;
}

struct AlignmentResult {
    double cos_adv = 0.0;
    double cos_transport = 0.0;
    bool adv_defined = false;
    bool transport_defined = false;
};

/// Cosine of the adversarial displacement (adv_point - x) and the transport
/// displacement (plan_image - x) against the descent direction
/// -sign(f(x)) grad f(x) of a binary model. Zero-length displacements are
/// flagged undefined.
inline AlignmentResult direction_alignment(const Model& model, const Vector& x,
                                           const Vector& plan_image, const Vector& adv_point) {
    if (model.output_count() != 1)
        throw std::invalid_argument("direction_alignment: binary models only");
    const double f = model.forward(x)[0];
    Vector dir = model.input_gradient(x, 0);
    const double sign = f >= 0.0 ? 1.0 : -1.0;
    for (auto& d : dir) d *= -sign;
    const double dn = l2_norm(dir);

    AlignmentResult res;
    if (dn == 0.0) return res;
    const Vector da = adv_point - x;
    const Vector dt = plan_image - x;
    const double na = l2_norm(da);
    const double nt = l2_norm(dt);
    if (na > 0.0) {
        res.cos_adv = dot(da, dir) / (na * dn);
        res.adv_defined = true;
    }
    if (nt > 0.0) {
        res.cos_transport = dot(dt, dir) / (nt * dn);
        res.transport_defined = true;
    }
    return res;
}

/// Least-squares scale c so that target ~ x - c f(x) grad f(x); used to
/// compare how far the adversarial point and the transport image travel
/// along the common descent direction.
inline double displacement_scale(const Model& model, const Vector& x, const Vector& target) {
    const double f = model.forward(x)[0];
    Vector step = model.input_gradient(x, 0);
    for (auto& s : step) s *= -f;
    const double denom = dot(step, step);
    if (denom == 0.0) throw std::runtime_error("displacement_scale: degenerate gradient");
    return dot(target - x, step) / denom;
}

}  // namespace lipkr

#endif  // LIPKR_ROBUSTNESS_HPP
