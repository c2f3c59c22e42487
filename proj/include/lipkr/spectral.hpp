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

#ifndef LIPKR_SPECTRAL_HPP
#define LIPKR_SPECTRAL_HPP

#include <cmath>
#include <stdexcept>

#include "lipkr/matrix.hpp"
#include "lipkr/rng.hpp"

namespace lipkr {

/// Result of estimating the largest singular value of a matrix.
/// `left_vec` and `right_vec` approximate the corresponding singular pair
/// and have unit norm once the iteration has converged.
struct SpectralEstimate {
    double sigma = 0.0;
    Vector left_vec;
    Vector right_vec;
    int iterations_used = 0;
    bool converged = false;
};

/// Power iteration on w^T w starting from a given unit vector. One iteration
/// is one application of w followed by w^T. Stops when the sigma estimate is
/// stable to `tol` (relative) between iterations.
///
/// Near-degenerate spectra (sigma_2 ~ sigma_1) converge slowly; callers that
/// need tight accuracy should pass a generous `max_iters` and a small `tol`.
inline SpectralEstimate power_iteration_from(const Matrix& w, int max_iters, double tol, Vector start) {
    if (max_iters < 1) throw std::invalid_argument("power_iteration: max_iters must be >= 1");
    if (tol <= 0.0) throw std::invalid_argument("power_iteration: tol must be positive");
    if (start.size() != w.cols())
        throw std::invalid_argument("power_iteration: start vector length mismatch");

    SpectralEstimate est;
    est.right_vec = std::move(start);

    // Unit fallback vectors for degenerate cases.
    auto unit_e0 = [](std::size_t n) {
        Vector e(n, 0.0);
        if (!e.empty()) e[0] = 1.0;
        return e;
    };

    double sigma_prev = -1.0;
    for (int it = 1; it <= max_iters; ++it) {
        Vector u = matvec(w, est.right_vec);
        const double un = l2_norm(u);
        if (un == 0.0) {
            // right_vec is in the null space; for the zero matrix this is the
            // correct answer, otherwise the caller drew an unlucky start.
            est.sigma = 0.0;
            est.left_vec = unit_e0(w.rows());
            est.iterations_used = it;
            est.converged = true;
            return est;
        }
        for (auto& e : u) e /= un;
        Vector v = matvec_transposed(w, u);
        const double sigma = l2_norm(v);
        est.iterations_used = it;
        est.left_vec = std::move(u);
        if (sigma == 0.0) {
            est.sigma = 0.0;
            est.converged = true;
            return est;
        }
        for (auto& e : v) e /= sigma;
        est.right_vec = std::move(v);
        est.sigma = sigma;
        if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= tol * sigma) {
            est.converged = true;
            return est;
        }
        sigma_prev = sigma;
    }
    return est;
}

/// Power iteration with a random unit start drawn from `rng`.
inline SpectralEstimate power_iteration(const Matrix& w, int max_iters, double tol, Rng& rng) {
    if (w.rows() == 0 || w.cols() == 0)
        throw std::invalid_argument("power_iteration: empty matrix");
    return power_iteration_from(w, max_iters, tol, rng.unit_vector(w.cols()));
}

/// Divides the weight by its estimated largest singular value, so the result
/// has spectral norm ~1.
inline Matrix spectral_normalize(const Matrix& w, const SpectralEstimate& est) {
    if (est.sigma <= 0.0)
        throw std::runtime_error("spectral_normalize: degenerate weight (sigma is zero)");
    Matrix out = w;
    out *= 1.0 / est.sigma;
    return out;
}

namespace detail {

// Deterministic largest-eigenvalue estimate of a symmetric PSD matrix,
// used as a cheap pre-scale check.
inline double psd_lambda_max(const Matrix& g, int iters) {
    const std::size_t n = g.rows();
    Vector v(n);
    std::uint64_t x = 0x6a09e667f3bcc908ULL;  // fixed-seed splitmix stream
    for (auto& e : v) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        e = static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53 - 0.5;
    }
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector gv = matvec(g, v);
        const double norm = l2_norm(gv);
        if (norm == 0.0) return 0.0;
        lambda = norm / l2_norm(v);
        for (auto& e : gv) e /= norm;
        v = std::move(gv);
    }
    return lambda;
}

}  // namespace detail

/// Bjorck orthonormalization: repeats
///   W <- W (I + c1 Q + c2 Q^2 + ... + c_order Q^order),  Q = I - W^T W
/// with the binomial-series coefficients c_p of (I - Q)^{-1/2}
/// (c1 = 1/2, c2 = 3/8, ...). Requires the input to be pre-scaled so its
/// largest singular value is at most 1; a detected violation throws.
///
/// `iters` is an upper bound; the loop exits early once the Gram residual
/// reaches machine-level precision. For a wide matrix the iteration runs on
/// the transpose so the Gram matrix is always on the smaller dimension.
inline Matrix bjorck_orthonormalize(const Matrix& w, int order = 1, int iters = 15) {
    if (order < 1) throw std::invalid_argument("bjorck_orthonormalize: order must be >= 1");
    if (iters < 0) throw std::invalid_argument("bjorck_orthonormalize: iters must be >= 0");
    if (w.rows() == 0 || w.cols() == 0)
        throw std::invalid_argument("bjorck_orthonormalize: empty matrix");
    if (w.rows() < w.cols()) return transpose(bjorck_orthonormalize(transpose(w), order, iters));

    const std::size_t n = w.cols();

    // c_p = |binom(-1/2, p)| via the recurrence c_p = c_{p-1} (2p-1)/(2p).
    std::vector<double> coeff(static_cast<std::size_t>(order) + 1, 0.0);
    coeff[0] = 1.0;
    for (int p = 1; p <= order; ++p)
        coeff[static_cast<std::size_t>(p)] =
            coeff[static_cast<std::size_t>(p - 1)] * (2.0 * p - 1.0) / (2.0 * p);

    Matrix cur = w;
    bool checked_scale = false;
    for (int it = 0; it < iters; ++it) {
        Matrix gram = matmul(transpose(cur), cur);
        Matrix q = Matrix::identity(n) - gram;
        if (!checked_scale) {
            // sigma(w) <= 1  <=>  lambda_max(w^T w) <= 1
            const double lam = detail::psd_lambda_max(gram, 40);
            if (lam > 1.0 + 1e-3)
                throw std::invalid_argument(
                    "bjorck_orthonormalize: pre-scale required (largest singular value exceeds 1)");
            checked_scale = true;
        }
        if (max_abs(q) < 1e-14) break;  // already orthonormal
        Matrix series = Matrix::identity(n);
        Matrix q_pow = Matrix::identity(n);
        for (int p = 1; p <= order; ++p) {
            q_pow = matmul(q_pow, q);
            series += coeff[static_cast<std::size_t>(p)] * q_pow;
        }
        cur = matmul(cur, series);
    }
    return cur;
}

/// max |W^T W - I| over the smaller-dimension Gram matrix.
inline double gram_residual(const Matrix& w) {
    const Matrix& tall = w;
    if (w.rows() < w.cols()) {
        Matrix t = transpose(w);
        return max_abs(matmul(transpose(t), t) - Matrix::identity(t.cols()));
    }
    return max_abs(matmul(transpose(tall), tall) - Matrix::identity(tall.cols()));
}

}  // namespace lipkr

#endif  // LIPKR_SPECTRAL_HPP
