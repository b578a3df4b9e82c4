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
#include <vector>

#include "fairprobe/cache.hpp"
#include "fairprobe/engine.hpp"
#include "fairprobe/schema.hpp"
#include "fairprobe/search.hpp"
#include "fairprobe/subject.hpp"

namespace fairprobe {

// Exhaustive ground truth on small domains. These functions are written
// directly from the score definitions, with plain nested enumeration loops
// and no use of the sampler, so they can serve as an independent reference
// for the adaptive engine. Scores are also exposed as exact integer
// fractions: comparisons between oracle scores can be done without floating
// point.

inline constexpr std::uint64_t kDefaultOracleDomainBound = 65'536;

struct OracleScore {
    double score = 0.0;
    std::uint64_t numerator = 0;
    std::uint64_t denominator = 1;
    std::uint64_t tests = 0;
    std::uint64_t cache_hits = 0;
    std::vector<GroupStat> groups; // group kind only

    /// Exact comparison of two oracle scores as rationals.
    static bool leq(const OracleScore& a, const OracleScore& b) {
        return static_cast<unsigned __int128>(a.numerator) * b.denominator <=
               static_cast<unsigned __int128>(b.numerator) * a.denominator;
    }
    bool geq_threshold(double theta) const { return score >= theta; }
};

namespace detail {

inline void check_oracle_domain(const Schema& schema, std::uint64_t bound) {
    const auto size = schema.domain_size();
    if (size > bound)
        throw BoundError("domain size " + std::to_string(size) +
                         " exceeds the oracle bound of " + std::to_string(bound));
}

} // namespace detail

/// Exact group discrimination score: enumerates all of K, tallies the true
/// frequency of every assignment of `subset`, and reports max - min.
inline OracleScore exhaustive_group(const Subject& subject, const Schema& schema,
                                    const CharSubset& subset, EvalCache* cache,
                                    std::uint64_t domain_bound = kDefaultOracleDomainBound) {
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("group score needs a non-empty subset");
    detail::check_oracle_domain(schema, domain_bound);

    const std::uint64_t domain = schema.domain_size();
    const std::uint64_t group_count = assignment_count(schema, subset);
    EvalContext ctx(subject, schema, cache);

    std::vector<std::uint64_t> positives(static_cast<std::size_t>(group_count), 0);
    std::vector<std::uint64_t> totals(static_cast<std::size_t>(group_count), 0);
    for (std::uint64_t r = 0; r < domain; ++r) {
        const Input k = schema.input_at(r);
        const auto g = static_cast<std::size_t>(assignment_rank(schema, subset, k));
        ++totals[g];
        if (ctx.evaluate(k)) ++positives[g];
    }

    OracleScore out;
    std::uint64_t max_pos = 0, min_pos = totals[0];
    double max_p = 0.0, min_p = 1.0;
    for (std::size_t g = 0; g < group_count; ++g) {
        GroupStat stat;
        stat.assignment = assignment_at(schema, subset, g);
        stat.key = detail::group_key(schema, subset, stat.assignment);
        stat.positives = positives[g];
        stat.samples = totals[g];
        stat.p = static_cast<double>(positives[g]) / static_cast<double>(totals[g]);
        stat.exact = true;
        max_pos = std::max(max_pos, positives[g]);
        min_pos = std::min(min_pos, positives[g]);
        max_p = std::max(max_p, stat.p);
        min_p = std::min(min_p, stat.p);
        out.groups.push_back(std::move(stat));
    }
    // every group of a full cartesian domain has the same size, so the exact
    // score is (max count - min count) / group size
    out.numerator = max_pos - min_pos;
    out.denominator = totals[0];
    out.score = max_p - min_p;
    out.tests = ctx.evaluations();
    out.cache_hits = ctx.hits();
    return out;
}

/// Exact causal discrimination score: for every input, checks every
/// assignment of `subset` other than its own for a decision flip.
inline OracleScore exhaustive_causal(const Subject& subject, const Schema& schema,
                                     const CharSubset& subset, EvalCache* cache,
                                     std::uint64_t domain_bound = kDefaultOracleDomainBound) {
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("causal score needs a non-empty subset");
    detail::check_oracle_domain(schema, domain_bound);

    const std::uint64_t domain = schema.domain_size();
    const std::uint64_t assignments = assignment_count(schema, subset);
    EvalContext ctx(subject, schema, cache);

    std::uint64_t flips = 0;
    for (std::uint64_t r = 0; r < domain; ++r) {
        const Input k0 = schema.input_at(r);
        const Decision d0 = ctx.evaluate(k0);
        const std::uint64_t own = assignment_rank(schema, subset, k0);
        for (std::uint64_t a = 0; a < assignments; ++a) {
            if (a == own) continue;
            const Input k = with_assignment(k0, subset, assignment_at(schema, subset, a));
            if (ctx.evaluate(k) != d0) {
                ++flips;
                break;
            }
        }
    }

    OracleScore out;
    out.numerator = flips;
    out.denominator = domain;
    out.score = static_cast<double>(flips) / static_cast<double>(domain);
    out.tests = ctx.evaluations();
    out.cache_hits = ctx.hits();
    return out;
}

inline OracleScore exhaustive_score(ScoreKind kind, const Subject& subject, const Schema& schema,
                                    const CharSubset& subset, EvalCache* cache,
                                    std::uint64_t domain_bound = kDefaultOracleDomainBound) {
    return kind == ScoreKind::group
               ? exhaustive_group(subject, schema, subset, cache, domain_bound)
               : exhaustive_causal(subject, schema, subset, cache, domain_bound);
}

/// Converts an oracle score to the engine's result shape (exact mode).
inline ScoreResult to_score_result(const OracleScore& o, ScoreKind kind,
                                   const CharSubset& subset, std::uint64_t tests,
                                   std::uint64_t hits) {
    ScoreResult r;
    r.kind = kind;
    r.subset = subset;
    r.score = o.score;
    r.groups = o.groups;
    r.exact = true;
    r.margin = 0.0;
    r.tests_generated = tests;
    r.cache_hits = hits;
    return r;
}

/// Discrimination checking against exact scores: scores subsets one by one
/// (all of them, or with superset pruning) and returns the minimal
/// qualifying antichain.
inline SearchResult exhaustive_search(const Subject& subject, const Schema& schema, double theta,
                                      ScoreKind kind, EvalCache* cache, bool prune = false,
                                      std::uint64_t domain_bound = kDefaultOracleDomainBound,
                                      std::size_t max_subset_size = 0) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must be in [0, 1]");
    if (kind != ScoreKind::group && kind != ScoreKind::causal)
        throw InvalidArgument("search kind must be group or causal");
    detail::check_oracle_domain(schema, domain_bound);
    if (schema.size() > 20)
        throw BoundError("schema has " + std::to_string(schema.size()) +
                         " characteristics; the exhaustive search bound is 20");

    return search_lattice(schema, max_subset_size, theta, /*workers=*/1, prune,
                          [&](const CharSubset& subset) -> ScoreResult {
                              auto o = exhaustive_score(kind, subject, schema, subset, cache,
                                                        domain_bound);
                              return to_score_result(o, kind, subset, o.tests, o.cache_hits);
                          });
}

} // namespace fairprobe
