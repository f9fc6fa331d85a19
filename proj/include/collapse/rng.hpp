// Copyright 2026 The collapse-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace collapse {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

// Counter-based generator: draw n of stream `key` is mix64(key + n*gamma),
// so any (key, n) is addressable without replaying earlier draws. Streams
// are split deterministically by hashing (parent key, child index).
//
// Distribution transforms are written out here rather than taken from
// <random>: std:: distributions are implementation-defined and would break
// bit-exact output across standard libraries.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : key_(mix64(key ^ 0x6a09e667f3bcc909ULL)), counter_(counter) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return mix64(key_ + (counter_++) * kGamma); }

    /// Independent child stream; pure function of (this key, index).
    constexpr CounterRng split(std::uint64_t index) const noexcept {
        return CounterRng(mix64(key_ ^ mix64(index + kGamma)));
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() noexcept { return (static_cast<double>((*this)() >> 11U) + 1.0) * 0x1.0p-53; }

    /// Uniform on (0, 1), never an endpoint.
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11U) + 0.5) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    double exponential(double mean) noexcept { return -mean * std::log(uniform_open_low()); }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t v = (*this)();
        while (v >= limit) v = (*this)();
        return v % n;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace collapse
