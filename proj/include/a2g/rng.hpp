/*
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

#pragma once

#include <cmath>
#include <cstdint>

namespace a2g {

/// Counter-free deterministic PRNG (xoshiro256** seeded via splitmix64).
/// All draws are implemented here rather than through <random> distributions
/// so that streams are bit-reproducible across standard library versions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
        cached_gauss_valid_ = false;
    }

    /// Derives an independent child stream; used for per-tree randomness
    /// so parallel and serial ensemble fits agree bitwise.
    static RngStream derive(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t x = seed;
        std::uint64_t a = splitmix64(x);
        std::uint64_t y = index + 0x9e3779b97f4a7c15ULL;
        std::uint64_t b = splitmix64(y);
        return RngStream(a ^ (b * 0xff51afd7ed558ccdULL));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound); bound > 0. Rejection-free bias is
    /// negligible for the bounds used here (<= a few thousand), but we use
    /// the widening-multiply trick which is unbiased enough and fast.
    std::uint64_t next_below(std::uint64_t bound) {
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (deterministic, caches the pair).
    double next_gaussian() {
        if (cached_gauss_valid_) {
            cached_gauss_valid_ = false;
            return cached_gauss_;
        }
        double u1 = 0.0;
        do { u1 = next_double(); } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        cached_gauss_ = r * std::sin(two_pi * u2);
        cached_gauss_valid_ = true;
        return r * std::cos(two_pi * u2);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
    double cached_gauss_ = 0.0;
    bool cached_gauss_valid_ = false;
};

/// FNV-1a 64-bit over a byte range; used for config fingerprints and
/// container integrity digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace a2g
