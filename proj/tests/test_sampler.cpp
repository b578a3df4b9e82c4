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

#include <array>
#include <cmath>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace fairprobe;
using testutil::binary_schema;
using testutil::labeled_schema;
using testutil::make_input;

namespace {

AdaptiveEstimator estimator(std::uint64_t samples, std::uint64_t positives) {
    AdaptiveEstimator est;
    est.samples = samples;
    est.positives = positives;
    return est;
}

} // namespace

TEST_CASE("z_value matches published normal quantiles") {
    // two-sided z* values from standard normal tables
    REQUIRE(std::abs(z_value(0.95) - 1.9599639845) < 1e-8);
    REQUIRE(std::abs(z_value(0.99) - 2.5758293035) < 1e-8);
    // Phi(1) - Phi(-1) = erf(1/sqrt 2): the 68.27% two-sided level sits at z = 1
    REQUIRE(std::abs(z_value(0.6826894921) - 1.0) < 1e-4);

    SECTION("strictly increasing in confidence") {
        double prev = 0.0;
        for (double conf = 0.05; conf < 0.999; conf += 0.01) {
            const double z = z_value(conf);
            REQUIRE(z > prev);
            prev = z;
        }
    }
    SECTION("within 1e-8 of an independent bisection inverse") {
        auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
        auto inverse_by_bisection = [&](double p) {
            double lo = -10.0, hi = 10.0;
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (lo + hi);
                (phi(mid) < p ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        for (double conf : {0.5, 0.68, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999})
            REQUIRE(std::abs(z_value(conf) - inverse_by_bisection(0.5 + conf / 2.0)) < 1e-8);
    }
    SECTION("rejects out-of-range confidence") {
        REQUIRE_THROWS_AS(z_value(0.0), InvalidArgument);
        REQUIRE_THROWS_AS(z_value(1.0), InvalidArgument);
        REQUIRE_THROWS_AS(z_value(-0.5), InvalidArgument);
    }
}

TEST_CASE("margin_of_error implements the Wald half-width") {
    SECTION("p=0.5, r=100, conf=0.95 gives about 0.098") {
        REQUIRE(std::abs(margin_of_error(estimator(100, 50), 0.95) - 0.098) < 1e-3);
    }
    SECTION("degenerate proportions have zero margin") {
        REQUIRE(margin_of_error(estimator(17, 0), 0.99) == 0.0);
        REQUIRE(margin_of_error(estimator(17, 17), 0.99) == 0.0);
    }
    SECTION("quadrupling r halves the margin") {
        const double m100 = margin_of_error(estimator(100, 50), 0.95);
        const double m400 = margin_of_error(estimator(400, 200), 0.95);
        REQUIRE(std::abs(m400 - m100 / 2.0) < 1e-12);
    }
    SECTION("requires at least one sample") {
        REQUIRE_THROWS_AS(margin_of_error(estimator(0, 0), 0.95), InvalidArgument);
    }
    SECTION("strictly decreasing in r at fixed p, maximal at p=0.5 for fixed r") {
        double prev = 1e9;
        for (std::uint64_t r = 10; r <= 1000; r += 30) {
            const double m = margin_of_error(estimator(r, r / 2), 0.95);
            REQUIRE(m < prev);
            prev = m;
        }
        const double at_half = margin_of_error(estimator(100, 50), 0.95);
        for (std::uint64_t pos : {10ULL, 30ULL, 70ULL, 90ULL})
            REQUIRE(margin_of_error(estimator(100, pos), 0.95) < at_half);
    }
}

TEST_CASE("should_stop gates on the threshold, the margin, and the budget") {
    SamplingConfig cfg;
    cfg.confidence = 0.95;
    cfg.epsilon = 0.05;
    cfg.sampling_threshold = 30;
    cfg.max_samples = 100'000;

    SECTION("below the sampling threshold nothing stops") {
        REQUIRE(!should_stop(estimator(10, 0), cfg));
        REQUIRE(!should_stop(estimator(10, 10), cfg));
    }
    SECTION("p=0.5 at r=100: margin 0.098 >= 0.05, keep sampling") {
        REQUIRE(!should_stop(estimator(100, 50), cfg));
    }
    SECTION("p=0.5 at r=400: margin 0.049 < 0.05, stop") {
        REQUIRE(should_stop(estimator(400, 200), cfg));
    }
    SECTION("the budget always stops") {
        cfg.max_samples = 100;
        REQUIRE(should_stop(estimator(100, 50), cfg));
    }
    SECTION("degenerate p still waits for the threshold") {
        REQUIRE(!should_stop(estimator(5, 5), cfg));
        REQUIRE(should_stop(estimator(30, 30), cfg));
    }
}

TEST_CASE("random_input honors constraints") {
    const Schema schema = labeled_schema({2, 3, 4});

    SECTION("fully constrained returns exactly the fixed input") {
        PartialAssignment fixed{CharSubset{0, 1, 2}, {1, 2, 3}};
        RngStream rng(7);
        REQUIRE(random_input(schema, fixed, rng) == make_input({1, 2, 3}));
    }
    SECTION("fixed positions pin, free positions vary") {
        PartialAssignment fixed{CharSubset{1}, {2}};
        RngStream rng(7);
        for (int i = 0; i < 200; ++i) {
            const Input k = random_input(schema, fixed, rng);
            REQUIRE(schema.valid_input(k));
            REQUIRE(k.values[1] == 2);
        }
    }
    SECTION("invalid fixed indices are rejected") {
        PartialAssignment bad{CharSubset{0}, {5}};
        RngStream rng(7);
        REQUIRE_THROWS_AS(random_input(schema, bad, rng), InvalidArgument);
        PartialAssignment mismatched{CharSubset{0, 1}, {0}};
        REQUIRE_THROWS_AS(random_input(schema, mismatched, rng), InvalidArgument);
    }
    SECTION("identical seeds give identical sequences") {
        RngStream a(42), b(42);
        PartialAssignment none = PartialAssignment::none();
        for (int i = 0; i < 100; ++i)
            REQUIRE(random_input(schema, none, a) == random_input(schema, none, b));
    }
}

TEST_CASE("unconstrained draws are uniform (chi-square, alpha = 0.001)") {
    const Schema schema = binary_schema(2);
    RngStream rng(123);
    const PartialAssignment none = PartialAssignment::none();
    std::array<std::uint64_t, 4> cells{};
    const std::uint64_t draws = 10'000;
    for (std::uint64_t i = 0; i < draws; ++i)
        ++cells[schema.rank_of(random_input(schema, none, rng))];
    const double expected = static_cast<double>(draws) / 4.0;
    double chi2 = 0.0;
    for (auto c : cells) {
        const double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    // chi-square critical value, 3 degrees of freedom, alpha = 0.001
    REQUIRE(chi2 < 16.266);
}

TEST_CASE("perturbations enumerate exactly the off-base cross product") {
    SECTION("one binary characteristic: the single flipped input") {
        const Schema schema = binary_schema(3);
        const Input base = make_input({1, 0, 1});
        PerturbationStream ps(base, CharSubset{1}, schema, RngStream(1));
        REQUIRE(ps.count() == 1);
        const auto k = ps.next();
        REQUIRE(k.has_value());
        REQUIRE(*k == make_input({1, 1, 1}));
        REQUIRE(!ps.next().has_value());
    }
    SECTION("two binary characteristics: three perturbations") {
        const Schema schema = binary_schema(3);
        PerturbationStream ps(make_input({0, 0, 0}), CharSubset{0, 2}, schema, RngStream(1));
        REQUIRE(ps.count() == 3);
        std::set<std::vector<std::uint32_t>> seen;
        while (auto k = ps.next()) {
            REQUIRE(k->values[1] == 0); // untouched outside the subset
            REQUIRE(seen.insert(k->values).second);
        }
        REQUIRE(seen.size() == 3);
    }
    SECTION("3x4 label subset: eleven perturbations, set-equal to brute force") {
        const Schema schema = labeled_schema({2, 3, 4});
        const Input base = make_input({1, 1, 2});
        PerturbationStream ps(base, CharSubset{1, 2}, schema, RngStream(9));
        REQUIRE(ps.count() == 11);
        std::set<std::vector<std::uint32_t>> got;
        while (auto k = ps.next()) got.insert(k->values);
        std::set<std::vector<std::uint32_t>> expected;
        for (std::uint32_t b = 0; b < 3; ++b)
            for (std::uint32_t c = 0; c < 4; ++c)
                if (!(b == 1 && c == 2)) expected.insert({1, b, c});
        REQUIRE(got == expected);
    }
    SECTION("never the base input, never a duplicate, reproducible") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Schema schema = testutil::random_small_schema(seed);
            RngStream pick(seed * 31 + 7);
            const Input base = random_input(schema, PartialAssignment::none(), pick);
            std::vector<std::uint32_t> idx;
            for (std::uint32_t i = 0; i < schema.size(); ++i)
                if (pick.bounded(2) == 0) idx.push_back(i);
            if (idx.empty()) idx.push_back(0);
            const CharSubset subset(idx);

            PerturbationStream a(base, subset, schema, RngStream(seed));
            PerturbationStream b(base, subset, schema, RngStream(seed));
            std::set<std::vector<std::uint32_t>> seen;
            std::uint64_t yielded = 0;
            while (auto k = a.next()) {
                ++yielded;
                REQUIRE(*k != base);
                REQUIRE(seen.insert(k->values).second);
                const auto other = b.next();
                REQUIRE(other.has_value());
                REQUIRE(*other == *k);
            }
            REQUIRE(yielded == a.count());
        }
    }
    SECTION("large index spaces go through the keyed permutation") {
        // 300 x 300 assignments exceed the shuffle limit of 65,536
        const Schema schema = labeled_schema({300, 300});
        const Input base = make_input({17, 217});
        PerturbationStream ps(base, CharSubset{0, 1}, schema, RngStream(5));
        REQUIRE(ps.count() == 300 * 300 - 1);
        std::set<std::uint64_t> seen;
        std::uint64_t yielded = 0;
        while (auto k = ps.next()) {
            ++yielded;
            REQUIRE(*k != base);
            REQUIRE(seen.insert(schema.rank_of(*k)).second);
        }
        REQUIRE(yielded == ps.count());
    }
}

TEST_CASE("sampling config validation") {
    SamplingConfig cfg;
    cfg.confidence = 1.5;
    REQUIRE_THROWS_AS(cfg.check(), InvalidArgument);
    cfg = SamplingConfig{};
    cfg.epsilon = 0.0;
    REQUIRE_THROWS_AS(cfg.check(), InvalidArgument);
    cfg = SamplingConfig{};
    cfg.sampling_threshold = 10;
    cfg.max_samples = 5;
    REQUIRE_THROWS_AS(cfg.check(), InvalidArgument);
    cfg = SamplingConfig{};
    REQUIRE_NOTHROW(cfg.check());
}
