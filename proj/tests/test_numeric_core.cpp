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

#include "lipkr/matrix.hpp"
#include "lipkr/rng.hpp"
#include "oracles.hpp"

using lipkr::Matrix;
using lipkr::Rng;
using lipkr::Vector;

TEST_CASE("matmul identity leaves the matrix unchanged") {
    Rng rng(11);
    const Matrix a = oracles::random_matrix(4, 4, rng);
    const Matrix out = lipkr::matmul(Matrix::identity(4), a);
    for (std::size_t i = 0; i < a.data().size(); ++i) REQUIRE(out.data()[i] == a.data()[i]);
}

TEST_CASE("matmul hand product") {
    Matrix a(2, 2, {1, 2, 3, 4});
    Matrix b(2, 1, {0, 1});
    const Matrix c = lipkr::matmul(a, b);
    REQUIRE(c(0, 0) == 2.0);
    REQUIRE(c(1, 0) == 4.0);
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(7);
    const Matrix a = oracles::random_matrix(3, 4, rng);
    const Matrix b = oracles::random_matrix(4, 2, rng);
    const Matrix got = lipkr::matmul(a, b);
    const Matrix want = oracles::matmul_naive(a, b);
    for (std::size_t i = 0; i < got.data().size(); ++i)
        REQUIRE_THAT(got.data()[i], Catch::Matchers::WithinRel(want.data()[i], 1e-13));
}

TEST_CASE("matmul rejects mismatched shapes") {
    Matrix a(2, 3), b(2, 2);
    REQUIRE_THROWS_AS(lipkr::matmul(a, b), std::invalid_argument);
}

TEST_CASE("matmul is associative on random triples") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix a = oracles::random_matrix(3, 5, rng);
        const Matrix b = oracles::random_matrix(5, 4, rng);
        const Matrix c = oracles::random_matrix(4, 6, rng);
        const Matrix left = lipkr::matmul(lipkr::matmul(a, b), c);
        const Matrix right = lipkr::matmul(a, lipkr::matmul(b, c));
        const double scale = std::max(1.0, lipkr::max_abs(left));
        for (std::size_t i = 0; i < left.data().size(); ++i)
            REQUIRE(std::abs(left.data()[i] - right.data()[i]) <= 1e-10 * scale);
    }
}

TEST_CASE("l2_norm basics") {
    REQUIRE(lipkr::l2_norm({0, 0, 0}) == 0.0);
    REQUIRE(lipkr::l2_norm({3, 4}) == 5.0);
}

TEST_CASE("l2_norm matches extended-precision accumulation") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const Vector v = oracles::random_vector(97, rng, 10.0);
        REQUIRE_THAT(lipkr::l2_norm(v),
                     Catch::Matchers::WithinRel(oracles::l2_norm_extended(v), 1e-13));
    }
}

TEST_CASE("l2_norm triangle inequality on random pairs") {
    Rng rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector a = oracles::random_vector(13, rng);
        const Vector b = oracles::random_vector(13, rng);
        REQUIRE(lipkr::l2_norm(a + b) <= lipkr::l2_norm(a) + lipkr::l2_norm(b) + 1e-12);
    }
}

TEST_CASE("equal seeds give identical streams") {
    Rng a(123456), b(123456);
    for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int agree = 0;
    for (int i = 0; i < 64; ++i) agree += a.next_u64() == b.next_u64();
    REQUIRE(agree == 0);
}

TEST_CASE("uniform stays in [0,1) and normal has sane moments") {
    Rng rng(99);
    double mean = 0.0, var = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        mean += z;
        var += z * z;
    }
    mean /= n;
    var = var / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.03);
    REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("unit_vector has unit norm") {
    Rng rng(8);
    for (std::size_t dim : {1u, 2u, 7u, 64u})
        REQUIRE_THAT(lipkr::l2_norm(rng.unit_vector(dim)), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("matrix constructor validates the value count") {
    REQUIRE_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
}
