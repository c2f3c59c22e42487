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

#include "lipkr/conv_factors.hpp"

using lipkr::AxisZeroCounts;
using lipkr::ConvGeometry;

TEST_CASE("stride-1 factor for k=3 on a 5x5 input is 2.6") {
    const ConvGeometry g = ConvGeometry::same(3, 1, 5, 5);
    REQUIRE_THAT(lipkr::conv_lipschitz_factor(g), Catch::Matchers::WithinAbs(2.6, 1e-12));
}

TEST_CASE("pointwise convolution has factor 1") {
    const ConvGeometry g = ConvGeometry::same(1, 1, 9, 7);
    REQUIRE(lipkr::conv_lipschitz_factor(g) == 1.0);
}

TEST_CASE("k=3 factor approaches 3 from below on large inputs") {
    const ConvGeometry g = ConvGeometry::same(3, 1, 1000, 1000);
    const double lambda = lipkr::conv_lipschitz_factor(g);
    REQUIRE(lambda < 3.0);
    REQUIRE(lambda > 2.99);
    // Monotone in the input size.
    const ConvGeometry small = ConvGeometry::same(3, 1, 10, 10);
    REQUIRE(lipkr::conv_lipschitz_factor(small) < lambda);
}

TEST_CASE("even kernels are rejected") {
    ConvGeometry g = ConvGeometry::same(3, 1, 5, 5);
    g.kernel = 4;
    REQUIRE_THROWS_AS(lipkr::conv_lipschitz_factor(g), std::invalid_argument);
    REQUIRE_THROWS_AS(lipkr::conv_lipschitz_factor_strided(g), std::invalid_argument);
}

TEST_CASE("strided zero counts for k=7, s=2 enumerate to (3,1) on the left") {
    // Leading windows have 3 and 1 padded entries, so zl = 4.
    const AxisZeroCounts z = lipkr::strided_zero_counts(7, 2, 16);
    REQUIRE(z.zl == 4);
}

TEST_CASE("inconsistent strided geometry is rejected") {
    ConvGeometry g = ConvGeometry::same(3, 2, 9, 9);
    g.out_width = 5;  // 9 != 2*5 + rw with 0 <= rw < 2
    REQUIRE_THROWS_AS(lipkr::conv_lipschitz_factor_strided(g), std::invalid_argument);
}

TEST_CASE("stride 1 strided factor equals the plain factor") {
    for (int k : {1, 3, 5, 7}) {
        for (int w = k; w <= 16; ++w) {
            for (int h = k; h <= 16; ++h) {
                const ConvGeometry g = ConvGeometry::same(k, 1, w, h);
                REQUIRE_THAT(lipkr::conv_lipschitz_factor_strided(g),
                             Catch::Matchers::WithinAbs(lipkr::conv_lipschitz_factor(g), 1e-12));
            }
        }
    }
}

TEST_CASE("stride 1 zero counts satisfy zl + zr = kh*(kh+1) exactly") {
    for (int k : {1, 3, 5, 7}) {
        const long long kh = (k - 1) / 2;
        for (int w = k; w <= 16; ++w) {
            const AxisZeroCounts z = lipkr::strided_zero_counts(k, 1, w);
            REQUIRE(z.zl + z.zr == kh * (kh + 1));
        }
    }
}

TEST_CASE("factors stay below the crude duplication bounds on all small geometries") {
    for (int k : {1, 3, 5, 7}) {
        for (int s : {1, 2, 3}) {
            for (int w = k; w <= 16; ++w) {
                for (int h = k; h <= 16; ++h) {
                    const ConvGeometry g = ConvGeometry::same(k, s, w, h);
                    if (g.out_width < 1 || g.out_height < 1) continue;
                    const double crude = static_cast<double>((k + s - 1) / s);
                    REQUIRE(lipkr::conv_lipschitz_factor_strided(g) <= crude + 1e-12);
                    if (s == 1)
                        REQUIRE(lipkr::conv_lipschitz_factor(g) <= static_cast<double>(k) + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("pooling constants") {
    REQUIRE(lipkr::pooling_lipschitz_constant(2, 2) == 0.5);
    REQUIRE(lipkr::pooling_lipschitz_constant(1, 1) == 1.0);
    REQUIRE_THAT(lipkr::pooling_lipschitz_constant(3, 2),
                 Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    REQUIRE_THROWS_AS(lipkr::pooling_lipschitz_constant(0, 1), std::invalid_argument);
}
