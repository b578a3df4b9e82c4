// Copyright 2026 The Fairprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <initializer_list>

namespace fairprobe {

// Deterministic randomness for the whole engine.
//
// Two documented generators are used:
//  * splitmix64 (Steele, Lea & Flood; the java.util.SplittableRandom update
//    and finalizer) for hashing, stream derivation, and random-access bit
//    streams. Output i of the sequence seeded with s is
//    mix64(s + (i+1) * 0x9E3779B97F4A7C15).
//  * xoshiro256** (Blackman & Vigna, 2018) as the per-stream generator,
//    seeded from four consecutive splitmix64 outputs as its authors recommend.
//
// Streams are split by hashing the run seed together with a purpose tag and
// the identifying tokens of the logical task (score kind, subset, group
// assignment, base input, ...). Two tasks with distinct token sequences get
// independent streams, so results do not depend on evaluation order.

constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Element `index` of the splitmix64 sequence seeded with `seed` (O(1) access).
constexpr std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + (index + 1) * kSplitMixGamma);
}

/// xoshiro256** stream with Lemire's unbiased bounded sampling.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        for (int i = 0; i < 4; ++i) s_[i] = splitmix64_at(seed, static_cast<std::uint64_t>(i));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform draw from [0, n). Lemire's multiply-shift rejection method
    /// ("Fast Random Integer Generation in an Interval", 2019).
    std::uint64_t bounded(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = (0ULL - n) % n;
            while (lo < t) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

/// Purpose tags keeping derived streams disjoint across score kinds.
enum class StreamTag : std::uint64_t {
    group_estimator = 1,
    causal_outer = 2,
    perturbation = 3,
    determinism_check = 4,
    apparent_causal = 5,
    profile_sampler = 6,
};

/// Incrementally hashes (seed, tag, tokens...) into a stream seed.
class StreamKey {
public:
    StreamKey(std::uint64_t seed, StreamTag tag) : h_(mix64(seed + kSplitMixGamma)) {
        absorb(static_cast<std::uint64_t>(tag));
    }

    StreamKey& absorb(std::uint64_t token) {
        h_ = mix64(h_ + kSplitMixGamma + token);
        return *this;
    }

    template <typename Container>
    StreamKey& absorb_range(const Container& c) {
        absorb(static_cast<std::uint64_t>(c.size()));
        for (const auto& v : c) absorb(static_cast<std::uint64_t>(v));
        return *this;
    }

    RngStream stream() const { return RngStream(h_); }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_;
};

} // namespace fairprobe
