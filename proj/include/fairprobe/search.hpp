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
#include <utility>
#include <vector>

#include "fairprobe/engine.hpp"
#include "fairprobe/schema.hpp"

namespace fairprobe {

// Finds every minimal characteristic subset whose (group or causal)
// discrimination score reaches a threshold. Subsets are visited
// size-ascending; any superset of a recorded discriminating set is pruned,
// which is sound because both scores are monotone under subset inclusion.

struct SearchConfig {
    double theta = 0.75;
    ScoreKind kind = ScoreKind::causal; // group or causal
    std::size_t max_subset_size = 0;    // 0 means the schema size
    SamplingConfig sampling;
    // With kind == causal, first compute the cheaper-to-exceed group score
    // and record the subset without a causal run when it already reaches
    // theta (group <= causal pointwise).
    bool use_group_shortcut = false;

    void check() const {
        if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must be in [0, 1]");
        if (kind != ScoreKind::group && kind != ScoreKind::causal)
            throw InvalidArgument("search kind must be group or causal");
        sampling.check();
    }
};

struct MinimalSet {
    CharSubset subset;
    ScoreResult score;
};

struct SearchResult {
    std::vector<MinimalSet> minimal_sets; // an antichain under inclusion
    std::uint64_t subsets_evaluated = 0;
    std::uint64_t subsets_pruned = 0;
    std::uint64_t tests_total = 0;
    std::uint64_t cache_hits = 0;
};

/// A subject or protocol failure mid-search. Carries whatever the walk had
/// established before the abort.
class SearchAborted : public ProtocolError {
public:
    SearchAborted(const ProtocolError& cause, SearchResult partial_result)
        : ProtocolError(cause.what()), partial(std::move(partial_result)) {}
    SearchResult partial;
};

/// True iff some recorded discriminating set is contained in `candidate`.
inline bool would_prune(const std::vector<CharSubset>& discriminating,
                        const CharSubset& candidate) {
    for (const auto& d : discriminating)
        if (d.subset_of(candidate)) return true;
    return false;
}

/// Size-ascending lattice walk shared by the engine-backed and oracle-backed
/// searches. `score` maps a subset to the ScoreResult used for the theta
/// test; subsets within one size tier may be scored in parallel, and pruning
/// records are merged only at tier boundaries, which leaves the outcome
/// identical to a sequential walk (no subset can prune another of the same
/// size).
template <typename ScoreFn>
SearchResult search_lattice(const Schema& schema, std::size_t max_subset_size, double theta,
                            unsigned workers, bool prune, ScoreFn&& score,
                            SearchResult* progress = nullptr) {
    const std::size_t n = schema.size();
    const std::size_t max_size = max_subset_size == 0 ? n : std::min(max_subset_size, n);

    SearchResult local;
    SearchResult& result = progress ? *progress : local;
    result = SearchResult{};
    std::vector<CharSubset> discriminating;
    for (std::size_t size = 1; size <= max_size; ++size) {
        std::vector<CharSubset> tier;
        for_each_subset_of_size(n, size, [&](const std::vector<std::uint32_t>& comb) {
            CharSubset s;
            s.indices = comb;
            if (prune && would_prune(discriminating, s)) {
                ++result.subsets_pruned;
                return;
            }
            tier.push_back(std::move(s));
        });

        std::vector<ScoreResult> scores(tier.size());
        std::vector<char> done(tier.size(), 0);
        auto record = [&](std::size_t i) {
            ++result.subsets_evaluated;
            result.tests_total += scores[i].tests_generated;
            result.cache_hits += scores[i].cache_hits;
            // an unpruned walk still reports only the minimal antichain:
            // qualifying supersets of a recorded set are scored but not kept
            if (scores[i].score >= theta && !would_prune(discriminating, tier[i])) {
                discriminating.push_back(tier[i]);
                result.minimal_sets.push_back({tier[i], std::move(scores[i])});
            }
        };
        try {
            detail::parallel_for(tier.size(), workers, [&](std::size_t i, unsigned) {
                scores[i] = score(tier[i]);
                done[i] = 1;
            });
        } catch (...) {
            // keep what this tier already established before rethrowing
            for (std::size_t i = 0; i < tier.size(); ++i)
                if (done[i]) record(i);
            throw;
        }
        for (std::size_t i = 0; i < tier.size(); ++i) record(i);
    }
    return result;
}

/// Solves the discrimination checking problem with sound pruning: returns
/// all minimal subsets whose estimated score reaches cfg.theta, plus search
/// statistics. Estimates straddling theta are taken at face value; the
/// per-result margins carry the uncertainty.
inline SearchResult discrimination_search(const Subject& subject, const Schema& schema,
                                          const SearchConfig& cfg, EvalCache* cache,
                                          DeterminismCheck* verify = nullptr) {
    cfg.check();
    SearchResult progress;
    try {
        return search_lattice(
            schema, cfg.max_subset_size, cfg.theta, cfg.sampling.workers, /*prune=*/true,
            [&](const CharSubset& subset) -> ScoreResult {
                if (cfg.kind == ScoreKind::group)
                    return group_score(subject, schema, subset, cfg.sampling, cache, verify)
                        .result;
                if (cfg.use_group_shortcut) {
                    auto g =
                        group_score(subject, schema, subset, cfg.sampling, cache, verify).result;
                    if (g.score >= cfg.theta) return g; // causally discriminating a fortiori
                    auto c =
                        causal_score(subject, schema, subset, cfg.sampling, cache, verify).result;
                    c.tests_generated += g.tests_generated;
                    c.cache_hits += g.cache_hits;
                    return c;
                }
                return causal_score(subject, schema, subset, cfg.sampling, cache, verify).result;
            },
            &progress);
    } catch (const ProtocolError& e) {
        throw SearchAborted(e, std::move(progress));
    }
}

} // namespace fairprobe
