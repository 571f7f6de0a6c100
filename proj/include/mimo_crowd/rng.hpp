// SPDX-License-Identifier: Apache-2.0
//
// mimo_crowd: user identification and channel estimation for crowded
// massive-MIMO uplink over Rician fading
// Copyright (C) 2026 The mimo_crowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MIMO_CROWD_RNG_HPP
#define MIMO_CROWD_RNG_HPP

#include "core.hpp"

#include <cmath>
#include <cstdint>

namespace mimo_crowd {

// Counter-based random streams. A stream is identified by a 64-bit key
// derived from (seed, purpose, a, b, c); the n-th output is a pure function
// of (key, n), so any realization can be regenerated in isolation.

enum class Purpose : std::uint64_t {
    population = 1,
    codebook = 2,
    active_set = 3,
    nlos = 4,
    pilot_noise = 5,
    data_noise = 6,
    symbols = 7,
    test = 99,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_key(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0,
                                          std::uint64_t b = 0, std::uint64_t c = 0)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key) {}

    RngStream(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0, std::uint64_t b = 0,
              std::uint64_t c = 0)
        : key_(stream_key(seed, purpose, a, b, c))
    {
    }

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Circularly symmetric complex normal with unit total variance.
    cplx cnormal()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-std::log(u1)); // sqrt(-2 ln u) / sqrt(2)
        const double angle = 2.0 * pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t position() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace mimo_crowd

#endif
