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

#include "lipkr/spectral.hpp"
#include "oracles.hpp"

using lipkr::Matrix;
using lipkr::Rng;
using lipkr::SpectralEstimate;

TEST_CASE("power iteration on a diagonal matrix") {
    Rng rng(1);
    Matrix w(2, 2, {3, 0, 0, 1});
    const SpectralEstimate est = lipkr::power_iteration(w, 200, 1e-12, rng);
    REQUIRE(est.converged);
    REQUIRE_THAT(est.sigma, Catch::Matchers::WithinAbs(3.0, 1e-9));
}

TEST_CASE("power iteration on the identity") {
    Rng rng(2);
    const SpectralEstimate est = lipkr::power_iteration(Matrix::identity(4), 100, 1e-9, rng);
    REQUIRE(est.converged);
    REQUIRE_THAT(est.sigma, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("power iteration on the zero matrix") {
    Rng rng(3);
    const SpectralEstimate est = lipkr::power_iteration(Matrix(3, 3), 50, 1e-9, rng);
    REQUIRE(est.converged);
    REQUIRE(est.sigma == 0.0);
}

TEST_CASE("power iteration matches the SVD oracle on a random 5x3 matrix") {
    Rng rng(4);
    const Matrix w = oracles::random_matrix(5, 3, rng);
    const SpectralEstimate est = lipkr::power_iteration(w, 5000, 1e-14, rng);
    REQUIRE_THAT(est.sigma, Catch::Matchers::WithinRel(oracles::svd_sigma_max(w), 1e-6));
    REQUIRE_THAT(lipkr::l2_norm(est.left_vec), Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE_THAT(lipkr::l2_norm(est.right_vec), Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("power iteration tracks the SVD oracle over many random shapes") {
    Rng rng(5);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t rows = 1 + rng.next_below(16);
        const std::size_t cols = 1 + rng.next_below(16);
        const Matrix w = oracles::random_matrix(rows, cols, rng);
        const SpectralEstimate est = lipkr::power_iteration(w, 20000, 1e-14, rng);
        REQUIRE_THAT(est.sigma, Catch::Matchers::WithinRel(oracles::svd_sigma_max(w), 1e-6));
    }
}

TEST_CASE("spectral_normalize scales a diagonal matrix") {
    Rng rng(6);
    Matrix w(2, 2, {3, 0, 0, 1});
    const SpectralEstimate est = lipkr::power_iteration(w, 500, 1e-13, rng);
    const Matrix out = lipkr::spectral_normalize(w, est);
    REQUIRE_THAT(out(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE_THAT(out(1, 1), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-9));
}

TEST_CASE("spectral_normalize is idempotent and rejects zero sigma") {
    Rng rng(7);
    const Matrix w = oracles::random_matrix(6, 4, rng);
    const SpectralEstimate est = lipkr::power_iteration(w, 5000, 1e-14, rng);
    const Matrix once = lipkr::spectral_normalize(w, est);
    const SpectralEstimate est2 = lipkr::power_iteration(once, 5000, 1e-14, rng);
    REQUIRE(est2.sigma >= 1.0 - 1e-5);
    REQUIRE(est2.sigma <= 1.0 + 1e-5);
    const Matrix twice = lipkr::spectral_normalize(once, est2);
    for (std::size_t i = 0; i < once.data().size(); ++i)
        REQUIRE_THAT(twice.data()[i], Catch::Matchers::WithinAbs(once.data()[i], 1e-10));

    SpectralEstimate zero;
    REQUIRE_THROWS_AS(lipkr::spectral_normalize(w, zero), std::runtime_error);
}

TEST_CASE("re-running power iteration on a normalized matrix gives sigma 1") {
    Rng rng(8);
    const Matrix w = oracles::random_matrix(7, 7, rng);
    const SpectralEstimate est = lipkr::power_iteration(w, 5000, 1e-14, rng);
    const Matrix out = lipkr::spectral_normalize(w, est);
    const SpectralEstimate re = lipkr::power_iteration(out, 5000, 1e-14, rng);
    REQUIRE(re.sigma >= 1.0 - 1e-5);
    REQUIRE(re.sigma <= 1.0 + 1e-5);
}

TEST_CASE("bjorck fixed point: an orthonormal matrix is unchanged") {
    // Rotation matrix, exactly orthonormal up to rounding.
    const double c = std::cos(0.3), s = std::sin(0.3);
    Matrix q(2, 2, {c, -s, s, c});
    const Matrix out = lipkr::bjorck_orthonormalize(q, 1, 25);
    for (std::size_t i = 0; i < q.data().size(); ++i)
        REQUIRE_THAT(out.data()[i], Catch::Matchers::WithinAbs(q.data()[i], 1e-10));
}

TEST_CASE("bjorck scalar recurrence: first iterate of 0.5 is 0.6875") {
    Matrix w(1, 1, {0.5});
    const Matrix one = lipkr::bjorck_orthonormalize(w, 1, 1);
    REQUIRE_THAT(one(0, 0), Catch::Matchers::WithinAbs(0.6875, 1e-15));
    const Matrix full = lipkr::bjorck_orthonormalize(w, 1, 40);
    REQUIRE_THAT(full(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("bjorck drives the Gram residual below 1e-4 on pre-scaled matrices") {
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix w = oracles::random_matrix(4, 4, rng);
        w *= 0.9 / oracles::svd_sigma_max(w);
        const Matrix out = lipkr::bjorck_orthonormalize(w, 1, 15);
        REQUIRE(lipkr::gram_residual(out) < 1e-4);
        REQUIRE(oracles::svd_sigma_max(out) <= 1.0 + 1e-6);
    }
}

TEST_CASE("bjorck handles wide matrices through the transpose") {
    Rng rng(10);
    Matrix w = oracles::random_matrix(3, 8, rng);
    w *= 0.8 / oracles::svd_sigma_max(w);
    const Matrix out = lipkr::bjorck_orthonormalize(w, 1, 20);
    REQUIRE(out.rows() == 3);
    REQUIRE(out.cols() == 8);
    REQUIRE(lipkr::gram_residual(out) < 1e-6);
}

TEST_CASE("bjorck order 2 converges as well") {
    Rng rng(11);
    Matrix w = oracles::random_matrix(5, 5, rng);
    w *= 0.9 / oracles::svd_sigma_max(w);
    const Matrix out = lipkr::bjorck_orthonormalize(w, 2, 15);
    REQUIRE(lipkr::gram_residual(out) < 1e-6);
}

TEST_CASE("bjorck rejects inputs that were not pre-scaled") {
    Rng rng(12);
    Matrix w = oracles::random_matrix(4, 4, rng);
    w *= 1.5 / oracles::svd_sigma_max(w);
    REQUIRE_THROWS_AS(lipkr::bjorck_orthonormalize(w, 1, 15), std::invalid_argument);
}
