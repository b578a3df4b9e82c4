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

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "fairprobe/errors.hpp"
#include "fairprobe/rng.hpp"
#include "fairprobe/schema.hpp"

namespace fairprobe {

// Seeded input generation and the adaptive, confidence-driven stopping rule.
// An estimator tracks the running proportion p of positive observations; its
// margin of error is the Wald half-width z* sqrt(p(1-p)/r), and sampling
// stops once the margin drops below epsilon (after a minimum number of
// samples) or the sample budget is exhausted.

struct SamplingConfig {
    double confidence = 0.99;
    double epsilon = 0.05;
    std::uint64_t max_samples = 100'000;
    std::uint64_t sampling_threshold = 30;
    std::uint64_t seed = 0;

    // When a constrained domain has at most this many inputs, enumerate it
    // once instead of sampling (exact p, margin 0). 0 disables the fallback.
    std::uint64_t exhaustive_limit = 1024;
    // Per base input, at most this many perturbations are tried before the
    // causal check gives up (a one-sided undercount, flagged lower_bound).
    // 0 means no cap.
    std::uint64_t causal_inner_cap = 256;
    // Worker threads for independent estimators. Results are identical for
    // any worker count.
    unsigned workers = 1;

    void check() const {
        if (max_samples == 0) throw InvalidArgument("max_samples must be at least 1");
        if (!(confidence > 0.0 && confidence < 1.0))
            throw InvalidArgument("confidence must be in (0, 1)");
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw InvalidArgument("epsilon must be in (0, 1)");
        if (sampling_threshold > max_samples)
            throw InvalidArgument("sampling_threshold must not exceed max_samples");
        if (workers == 0) throw InvalidArgument("workers must be at least 1");
    }
};

struct AdaptiveEstimator {
    std::uint64_t samples = 0;
    std::uint64_t positives = 0;

    void observe(bool positive) {
        ++samples;
        if (positive) ++positives;
    }
    double proportion() const {
        return samples == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(samples);
    }
};

/// Two-sided standard-normal quantile z* for a confidence level.
///
/// Uses Acklam's rational approximation of the inverse normal CDF
/// (P. J. Acklam, "An algorithm for computing the inverse normal cumulative
/// distribution function", 2003; relative error < 1.15e-9), followed by one
/// Halley refinement step against erfc, which brings the result to within a
/// few ulps.
inline double z_value(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidArgument("confidence must be in (0, 1)");
    const double p = 0.5 + confidence / 2.0; // upper-tail quantile of the two-sided level

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley step: e = Phi(x) - p, with Phi via erfc.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

/// Wald margin of error z* sqrt(p(1-p)/r) for an estimator.
inline double margin_of_error(const AdaptiveEstimator& est, double confidence) {
    if (est.samples == 0) throw InvalidArgument("margin_of_error requires at least one sample");
    const double p = est.proportion();
    const double r = static_cast<double>(est.samples);
    return z_value(confidence) * std::sqrt(p * (1.0 - p) / r);
}

/// True once the margin is below epsilon (after the minimum sample count) or
/// the budget is exhausted.
inline bool should_stop(const AdaptiveEstimator& est, const SamplingConfig& cfg) {
    if (est.samples >= cfg.max_samples) return true;
    if (est.samples == 0 || est.samples < cfg.sampling_threshold) return false;
    return margin_of_error(est, cfg.confidence) < cfg.epsilon;
}

/// A fixed value assignment over a characteristic subset.
struct PartialAssignment {
    CharSubset subset;
    std::vector<std::uint32_t> values; // one per subset index, in subset order

    static PartialAssignment none() { return {}; }

    void check_for(const Schema& schema) const {
        subset.check_for(schema);
        if (values.size() != subset.size())
            throw InvalidArgument("assignment length does not match subset");
        for (std::size_t i = 0; i < subset.size(); ++i)
            if (values[i] >= schema.label_count(subset.indices[i]))
                throw InvalidArgument("assignment value out of range for characteristic " +
                                      std::to_string(subset.indices[i]));
    }
};

/// A uniform random input matching `fixed` on its subset; every free
/// characteristic is drawn independently and uniformly.
inline Input random_input(const Schema& schema, const PartialAssignment& fixed, RngStream& rng) {
    fixed.check_for(schema);
    Input k;
    k.values.resize(schema.size());
    std::size_t fi = 0;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (fi < fixed.subset.size() && fixed.subset.indices[fi] == i) {
            k.values[i] = fixed.values[fi];
            ++fi;
        } else {
            k.values[i] = static_cast<std::uint32_t>(rng.bounded(schema.label_count(i)));
        }
    }
    return k;
}

namespace detail {

/// Keyed bijection on [0, 2^bits) built from a 4-round Feistel network; used
/// with cycle-walking to permute index spaces too large to shuffle.
class FeistelPermutation {
public:
    FeistelPermutation(std::uint64_t domain, RngStream& rng) : domain_(domain) {
        unsigned bits = 1;
        while ((1ULL << bits) < domain) ++bits;
        half_bits_ = (bits + 1) / 2;
        mask_ = (1ULL << half_bits_) - 1;
        for (auto& k : keys_) k = rng.next_u64();
    }

    std::uint64_t apply(std::uint64_t x) const {
        do {
            x = round_trip(x);
        } while (x >= domain_); // cycle-walk back into the domain
        return x;
    }

private:
    std::uint64_t round_trip(std::uint64_t x) const {
        std::uint64_t left = x >> half_bits_;
        std::uint64_t right = x & mask_;
        for (const auto key : keys_) {
            const std::uint64_t next = left ^ (mix64(right ^ key) & mask_);
            left = right;
            right = next;
        }
        return (left << half_bits_) | right;
    }

    std::uint64_t domain_;
    unsigned half_bits_;
    std::uint64_t mask_;
    std::uint64_t keys_[4];
};

} // namespace detail

/// Streams every input that differs from a base input only within `subset`,
/// in a seeded pseudorandom order: a Fisher-Yates shuffle of the enumerated
/// assignment ranks when there are at most 65,536 of them, and a keyed
/// Feistel index permutation otherwise. The base input itself is never
/// yielded; the total count is (prod of subset label counts) - 1.
class PerturbationStream {
public:
    PerturbationStream(const Input& base, const CharSubset& subset, const Schema& schema,
                       RngStream rng)
        : base_(base), subset_(subset), schema_(&schema), rng_(rng) {
        if (subset.empty()) throw InvalidArgument("perturbation subset must be non-empty");
        subset.check_for(schema);
        schema.check_input(base);
        domain_ = assignment_count(schema, subset);
        base_rank_ = assignment_rank(schema, subset, base);
        if (domain_ <= kShuffleLimit) {
            order_.reserve(static_cast<std::size_t>(domain_ - 1));
            for (std::uint64_t r = 0; r < domain_; ++r)
                if (r != base_rank_) order_.push_back(r);
            for (std::size_t i = order_.size(); i > 1; --i)
                std::swap(order_[i - 1], order_[rng_.bounded(i)]);
        } else {
            feistel_.emplace(domain_, rng_);
        }
    }

    /// Total number of perturbations.
    std::uint64_t count() const { return domain_ - 1; }

    std::optional<Input> next() {
        std::uint64_t rank;
        if (feistel_) {
            do {
                if (cursor_ >= domain_) return std::nullopt;
                rank = feistel_->apply(cursor_++);
            } while (rank == base_rank_);
        } else {
            if (pos_ >= order_.size()) return std::nullopt;
            rank = order_[pos_++];
        }
        return with_assignment(base_, subset_, assignment_at(*schema_, subset_, rank));
    }

private:
    static constexpr std::uint64_t kShuffleLimit = 65'536;

    Input base_;
    CharSubset subset_;
    const Schema* schema_;
    RngStream rng_;
    std::uint64_t domain_ = 0;
    std::uint64_t base_rank_ = 0;
    std::vector<std::uint64_t> order_;
    std::size_t pos_ = 0;
    std::uint64_t cursor_ = 0;
    std::optional<detail::FeistelPermutation> feistel_;
};

} // namespace fairprobe
