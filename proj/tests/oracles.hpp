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

// Test-only reference implementations, kept independent of the library code
// paths they check.

#ifndef LIPKR_TESTS_ORACLES_HPP
#define LIPKR_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "lipkr/matrix.hpp"
#include "lipkr/rng.hpp"

namespace oracles {

using lipkr::Matrix;
using lipkr::Vector;

/// Naive triple-loop product in ijk order.
inline Matrix matmul_naive(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

/// Euclidean norm accumulated in extended precision.
inline double l2_norm_extended(const Vector& v) {
    long double acc = 0.0L;
    for (double e : v) acc += static_cast<long double>(e) * static_cast<long double>(e);
    return static_cast<double>(sqrtl(acc));
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method.
inline std::vector<double> jacobi_eigenvalues(Matrix a, int sweeps = 100) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    return eig;
}

/// Largest singular value via Jacobi eigenvalues of W^T W.
inline double svd_sigma_max(const Matrix& w) {
    const Matrix gram = matmul_naive(lipkr::transpose(w), w);
    double lam = 0.0;
    for (double e : jacobi_eigenvalues(gram)) lam = std::max(lam, e);
    return std::sqrt(std::max(0.0, lam));
}

/// Central finite difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x0,
                                 double h = 1e-5) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

/// Minimum-cost assignment value of an n x n cost matrix by exhausting the
/// n! permutations; with uniform 1/n marginals the transportation-polytope
/// vertices are exactly the scaled permutation matrices.
inline double assignment_minimum(const Matrix& cost) {
    const std::size_t n = cost.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += cost(i, perm[i]);
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, lipkr::Rng& rng,
                            double scale = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.normal() * scale;
    return m;
}

inline Vector random_vector(std::size_t n, lipkr::Rng& rng, double scale = 1.0) {
    Vector v(n);
    for (auto& e : v) e = rng.normal() * scale;
    return v;
}

}  // namespace oracles

#endif  // LIPKR_TESTS_ORACLES_HPP
