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

#ifndef LIPKR_RNG_HPP
#define LIPKR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lipkr {

/// Deterministic random source: xoshiro256++ seeded through splitmix64.
/// The integer and uniform streams are reproducible bit-for-bit for a given
/// seed on any platform with IEEE-754 doubles; `normal()` additionally
/// depends on the platform's `std::log`, which in practice agrees to the
/// last bit on mainstream libms.
///
/// An instance is cheap to copy and must not be shared between threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the 256-bit state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via the Marsaglia polar method (second value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniformly distributed point on the unit sphere in `dim` dimensions.
    std::vector<double> unit_vector(std::size_t dim) {
        if (dim == 0) throw std::invalid_argument("Rng::unit_vector: dim must be positive");
        std::vector<double> v(dim);
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (auto& e : v) {
                e = normal();
                norm_sq += e * e;
            }
        } while (norm_sq == 0.0);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& e : v) e *= inv;
        return v;
    }

    /// Fisher-Yates shuffle driven by this stream.
    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lipkr

#endif  // LIPKR_RNG_HPP
