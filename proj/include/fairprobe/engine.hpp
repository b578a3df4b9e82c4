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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fairprobe/cache.hpp"
#include "fairprobe/sampler.hpp"
#include "fairprobe/schema.hpp"
#include "fairprobe/subject.hpp"

namespace fairprobe {

// Discrimination scores.
//
// group score:   max - min, over all value assignments of the subset, of the
//                frequency with which the subject outputs true when the
//                subset is fixed to that assignment.
// causal score:  the fraction of inputs for which some change confined to
//                the subset flips the decision.
// apparent:      either score evaluated over a partial input domain (a test
//                suite, or inputs drawn from an operational profile) instead
//                of the full domain. Apparent results carry no confidence.

enum class ScoreKind { group, causal, apparent_group, apparent_causal };

inline const char* to_string(ScoreKind kind) {
    switch (kind) {
    case ScoreKind::group:
        return "group";
    case ScoreKind::causal:
        return "causal";
    case ScoreKind::apparent_group:
        return "apparent-group";
    case ScoreKind::apparent_causal:
        return "apparent-causal";
    }
    return "";
}

/// Per-assignment statistics backing a group-style score.
struct GroupStat {
    std::vector<std::uint32_t> assignment; // label indices over the subset
    std::string key;                       // comma-joined label texts
    std::uint64_t positives = 0;
    std::uint64_t samples = 0;
    double p = 0.0;
    double margin = 0.0;
    bool exact = false;
    bool hit_max_samples = false;

    void observe(bool positive) {
        ++samples;
        if (positive) ++positives;
    }
};

struct ScoreResult {
    ScoreKind kind = ScoreKind::group;
    CharSubset subset;
    double score = 0.0;
    std::optional<double> confidence; // absent for apparent and exact results
    std::optional<double> epsilon;
    std::optional<double> margin; // worst-case bound on the score itself
    std::vector<GroupStat> groups;
    std::uint64_t tests_generated = 0;
    std::uint64_t cache_hits = 0;
    bool exact = false;
    bool lower_bound = false;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

/// An ordered set of inputs without duplicates.
class TestSuite {
public:
    bool insert(const Input& k) {
        if (!seen_.insert(k).second) return false;
        inputs_.push_back(k);
        return true;
    }

    bool contains(const Input& k) const { return seen_.count(k) > 0; }
    const std::vector<Input>& inputs() const { return inputs_; }
    std::size_t size() const { return inputs_.size(); }
    bool empty() const { return inputs_.empty(); }

private:
    std::vector<Input> inputs_;
    std::unordered_set<Input, InputHash> seen_;
};

struct ScoreOutput {
    ScoreResult result;
    TestSuite suite;
};

/// A subject or protocol failure mid-measurement. Carries the statistics
/// gathered before the abort so the failing run can still be reported.
class ScoreAborted : public ProtocolError {
public:
    ScoreAborted(const ProtocolError& cause, ScoreResult partial_result)
        : ProtocolError(cause.what()), partial(std::move(partial_result)) {}
    ScoreResult partial;
};

namespace detail {

[[noreturn]] inline void abort_score(const ProtocolError& cause, ScoreKind kind,
                                     const CharSubset& subset, std::uint64_t seed,
                                     std::uint64_t tests, std::uint64_t hits) {
    ScoreResult partial;
    partial.kind = kind;
    partial.subset = subset;
    partial.seed = seed;
    partial.tests_generated = tests;
    partial.cache_hits = hits;
    partial.warnings.push_back(std::string("aborted: ") + cause.what());
    throw ScoreAborted(cause, std::move(partial));
}

} // namespace detail

// --- test-suite CSV ----------------------------------------------------------
// Header row: characteristic names in schema order. One row per input, label
// texts, comma separated. Duplicate rows are an error.

inline TestSuite read_suite_csv(std::istream& in, const Schema& schema) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        cells.push_back(cur);
        return cells;
    };

    std::string line;
    if (!std::getline(in, line)) throw ParseError("test suite is empty");
    const auto header = split(line);
    if (header.size() != schema.size())
        throw ParseError("test-suite header has " + std::to_string(header.size()) +
                         " columns, schema has " + std::to_string(schema.size()));
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != schema.characteristic(i).name)
            throw ParseError("test-suite column " + std::to_string(i) + " is '" + header[i] +
                             "', expected '" + schema.characteristic(i).name + "'");

    TestSuite suite;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != schema.size())
            throw ParseError("test-suite line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " columns");
        Input k;
        k.values.resize(schema.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& labels = schema.characteristic(i).labels;
            auto it = std::find(labels.begin(), labels.end(), cells[i]);
            if (it == labels.end())
                throw ParseError("unknown label '" + cells[i] + "' for characteristic '" +
                                 schema.characteristic(i).name + "' on line " +
                                 std::to_string(line_no));
            k.values[i] = static_cast<std::uint32_t>(it - labels.begin());
        }
        if (!suite.insert(k))
            throw ParseError("duplicate input on test-suite line " + std::to_string(line_no));
    }
    if (suite.empty()) throw ParseError("test suite has no inputs");
    return suite;
}

inline void write_suite_csv(std::ostream& out, const TestSuite& suite, const Schema& schema) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (i) out << ',';
        out << schema.characteristic(i).name;
    }
    out << '\n';
    for (const auto& k : suite.inputs()) out << schema.wire_line(k) << '\n';
}

// --- operational profile ------------------------------------------------------
// Per-characteristic label weights, independent across characteristics.
// Document form: {"weights":{"age":{"lt40":0.25,"geq40":0.75}}}; characteristics
// not listed are uniform; a listed characteristic must weight every label, and
// the weights must sum to 1 within 1e-9.

struct OperationalProfile {
    std::vector<std::vector<double>> weights; // [characteristic][label]

    static OperationalProfile uniform(const Schema& schema) {
        OperationalProfile p;
        p.weights.resize(schema.size());
        for (std::size_t i = 0; i < schema.size(); ++i)
            p.weights[i].assign(schema.label_count(i),
                                1.0 / static_cast<double>(schema.label_count(i)));
        return p;
    }

    void check_for(const Schema& schema) const {
        if (weights.size() != schema.size())
            throw InvalidArgument("profile does not cover every characteristic");
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i].size() != schema.label_count(i))
                throw InvalidArgument("profile does not weight every label of '" +
                                      schema.characteristic(i).name + "'");
            double sum = 0.0;
            for (double w : weights[i]) {
                if (w < 0.0) throw InvalidArgument("negative profile weight");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw InvalidArgument("profile weights for '" + schema.characteristic(i).name +
                                      "' sum to " + std::to_string(sum) + ", expected 1");
        }
    }

    Input sample(const Schema& schema, RngStream& rng) const {
        Input k;
        k.values.resize(schema.size());
        for (std::size_t i = 0; i < schema.size(); ++i) {
            const double u = rng.next_double();
            double acc = 0.0;
            std::uint32_t pick = schema.label_count(i) - 1;
            for (std::uint32_t l = 0; l < schema.label_count(i); ++l) {
                acc += weights[i][l];
                if (u < acc) {
                    pick = l;
                    break;
                }
            }
            k.values[i] = pick;
        }
        return k;
    }
};

inline OperationalProfile parse_profile(const std::string& text, const Schema& schema) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("profile document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("weights") || !doc["weights"].is_object())
        throw ParseError("profile document must be an object with a 'weights' object");
    for (const auto& item : doc.items())
        if (item.key() != "weights")
            throw ParseError("unknown key '" + item.key() + "' in profile document");

    auto profile = OperationalProfile::uniform(schema);
    for (const auto& [name, table] : doc["weights"].items()) {
        auto idx = schema.index_of(name);
        if (!idx) throw ParseError("profile weights an unknown characteristic '" + name + "'");
        if (!table.is_object())
            throw ParseError("profile weights for '" + name + "' must be an object");
        const auto& labels = schema.characteristic(*idx).labels;
        std::vector<double> w(labels.size(), -1.0);
        for (const auto& [label, value] : table.items()) {
            auto it = std::find(labels.begin(), labels.end(), label);
            if (it == labels.end())
                throw ParseError("profile weights an unknown label '" + label + "' of '" + name +
                                 "'");
            if (!value.is_number())
                throw ParseError("profile weight for '" + label + "' must be a number");
            w[static_cast<std::size_t>(it - labels.begin())] = value.get<double>();
        }
        for (std::size_t l = 0; l < w.size(); ++l)
            if (w[l] < 0.0)
                throw ParseError("profile for '" + name + "' is missing label '" + labels[l] +
                                 "'");
        profile.weights[*idx] = std::move(w);
    }
    try {
        profile.check_for(schema);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return profile;
}

// --- parallel helper ----------------------------------------------------------

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Exceptions are
/// rethrown on the caller's thread (first one wins).
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i, 0u);
        return;
    }
    const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(used);
    std::vector<std::thread> threads;
    threads.reserve(used);
    for (unsigned w = 0; w < used; ++w) {
        threads.emplace_back([&, w] {
            try {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) return;
                    fn(i, w);
                }
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(count); // stop handing out work
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::string group_key(const Schema& schema, const CharSubset& subset,
                             const std::vector<std::uint32_t>& assignment) {
    std::string key;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (i) key += ',';
        key += schema.characteristic(subset.indices[i]).labels[assignment[i]];
    }
    return key;
}

/// Evaluates whether some perturbation of `base` within `subset` flips the
/// decision, stopping at the first flip. Honors the inner cap; sets
/// `capped` when the cap cut enumeration short.
inline bool has_flipping_perturbation(EvalContext& ctx, const Subject& subject, const Input& base,
                                      Decision base_decision, const CharSubset& subset,
                                      const SamplingConfig& cfg, TestSuite* suite, bool& capped) {
    RngStream rng = StreamKey(cfg.seed, StreamTag::perturbation)
                        .absorb_range(subset.indices)
                        .absorb_range(base.values)
                        .stream();
    PerturbationStream stream(base, subset, ctx.schema(), rng);
    const std::uint64_t cap = cfg.causal_inner_cap;
    if (cap != 0 && stream.count() > cap) capped = true;
    std::uint64_t tried = 0;
    while (auto k = stream.next()) {
        if (cap != 0 && tried >= cap) break;
        ++tried;
        if (suite) suite->insert(*k);
        if (ctx.evaluate(subject, *k) != base_decision) return true;
    }
    return false;
}

} // namespace detail

// --- group score ----------------------------------------------------------------

/// Group discrimination score over a subset: estimates, for every value
/// assignment of the subset, the frequency of true outputs with the subset
/// fixed, then reports max - min. Each frequency comes from adaptive
/// sampling, or from full enumeration when the constrained domain is small
/// enough. The reported score margin is the worst case 2*epsilon (each
/// frequency individually satisfies margin < epsilon at the configured
/// confidence unless max_samples was hit).
inline ScoreOutput group_score(const Subject& subject, const Schema& schema,
                               const CharSubset& subset, const SamplingConfig& cfg,
                               EvalCache* cache, DeterminismCheck* verify = nullptr) {
    cfg.check();
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("group score needs a non-empty subset");

    const std::uint64_t group_count = assignment_count(schema, subset);
    if (group_count > (1ULL << 32)) throw BoundError("group count exceeds 2^32");

    ScoreOutput out;
    out.result.kind = ScoreKind::group;
    out.result.subset = subset;
    out.result.seed = cfg.seed;
    if (group_count > 10'000)
        out.result.warnings.push_back("group count " + std::to_string(group_count) +
                                      " exceeds 10000; consider a smaller subset");

    const std::uint64_t free_domain = free_domain_size(schema, subset);
    const bool exhaustive = cfg.exhaustive_limit != 0 && free_domain <= cfg.exhaustive_limit;

    EvalContext ctx(subject, schema, cache, verify);
    std::vector<GroupStat> stats(static_cast<std::size_t>(group_count));
    std::vector<TestSuite> suites(static_cast<std::size_t>(group_count));
    std::vector<Subject> workers;
    workers.reserve(cfg.workers);
    for (unsigned w = 0; w < cfg.workers; ++w)
        workers.push_back(w == 0 ? subject : subject.worker_clone());

    auto estimate_group = [&](std::size_t g, unsigned w) {
        GroupStat& stat = stats[g];
        stat.assignment = assignment_at(schema, subset, g);
        stat.key = detail::group_key(schema, subset, stat.assignment);
        const Subject& subj = workers[w];

        if (exhaustive) {
            // walk the constrained domain with an odometer over the free
            // characteristics
            Input k;
            k.values.assign(schema.size(), 0);
            for (std::size_t i = 0; i < subset.size(); ++i)
                k.values[subset.indices[i]] = stat.assignment[i];
            while (true) {
                suites[g].insert(k);
                stat.observe(ctx.evaluate(subj, k));
                // advance the free positions, last varying fastest
                std::size_t i = schema.size();
                bool done = true;
                while (i-- > 0) {
                    if (subset.contains(static_cast<std::uint32_t>(i))) continue;
                    if (++k.values[i] < schema.label_count(i)) {
                        done = false;
                        break;
                    }
                    k.values[i] = 0;
                }
                if (done) break;
            }
            stat.p = stat.samples == 0 ? 0.0
                                       : static_cast<double>(stat.positives) /
                                             static_cast<double>(stat.samples);
            stat.margin = 0.0;
            stat.exact = true;
            return;
        }

        PartialAssignment fixed{subset, stat.assignment};
        RngStream rng = StreamKey(cfg.seed, StreamTag::group_estimator)
                            .absorb_range(subset.indices)
                            .absorb_range(stat.assignment)
                            .stream();
        AdaptiveEstimator est;
        do {
            const Input k = random_input(schema, fixed, rng);
            suites[g].insert(k);
            est.observe(ctx.evaluate(subj, k));
        } while (!should_stop(est, cfg));
        stat.positives = est.positives;
        stat.samples = est.samples;
        stat.p = est.proportion();
        stat.margin = margin_of_error(est, cfg.confidence);
        stat.hit_max_samples = est.samples >= cfg.max_samples && stat.margin >= cfg.epsilon;
    };

    try {
        detail::parallel_for(static_cast<std::size_t>(group_count), cfg.workers, estimate_group);
    } catch (const ProtocolError& e) {
        detail::abort_score(e, ScoreKind::group, subset, cfg.seed, ctx.evaluations(), ctx.hits());
    }

    double max_p = 0.0, min_p = 1.0;
    for (const auto& s : stats) {
        max_p = std::max(max_p, s.p);
        min_p = std::min(min_p, s.p);
        out.result.tests_generated += s.samples;
        if (s.hit_max_samples)
            out.result.warnings.push_back("group " + s.key +
                                          " hit max_samples before reaching the error margin");
    }
    out.result.score = max_p - min_p;
    out.result.groups = std::move(stats);
    out.result.exact = exhaustive;
    if (exhaustive) {
        out.result.margin = 0.0;
    } else {
        out.result.confidence = cfg.confidence;
        out.result.epsilon = cfg.epsilon;
        out.result.margin = 2.0 * cfg.epsilon;
    }
    out.result.cache_hits = ctx.hits();
    for (auto& s : suites)
        for (const auto& k : s.inputs()) out.suite.insert(k);
    return out;
}

// --- causal score ---------------------------------------------------------------

/// Causal discrimination score over a subset: the fraction of inputs for
/// which some perturbation confined to the subset flips the decision.
/// Base inputs are enumerated exhaustively when the domain is small enough,
/// otherwise sampled adaptively; each base input's perturbations are checked
/// in a seeded pseudorandom order, stopping at the first flip. When the
/// perturbation count exceeds the inner cap only a seeded subset is checked
/// and the result is flagged as a lower bound.
inline ScoreOutput causal_score(const Subject& subject, const Schema& schema,
                                const CharSubset& subset, const SamplingConfig& cfg,
                                EvalCache* cache, DeterminismCheck* verify = nullptr) {
    cfg.check();
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("causal score needs a non-empty subset");

    ScoreOutput out;
    out.result.kind = ScoreKind::causal;
    out.result.subset = subset;
    out.result.seed = cfg.seed;

    EvalContext ctx(subject, schema, cache, verify);
    const std::uint64_t domain = schema.domain_size();
    const bool exhaustive = cfg.exhaustive_limit != 0 && domain <= cfg.exhaustive_limit;
    std::vector<Subject> workers;
    workers.reserve(cfg.workers);
    for (unsigned w = 0; w < cfg.workers; ++w)
        workers.push_back(w == 0 ? subject : subject.worker_clone());

    if (exhaustive) {
        std::vector<char> flipped(static_cast<std::size_t>(domain), 0);
        std::vector<char> capped_any(static_cast<std::size_t>(domain), 0);
        std::vector<TestSuite> suites(static_cast<std::size_t>(domain));
        try {
            detail::parallel_for(
                static_cast<std::size_t>(domain), cfg.workers, [&](std::size_t r, unsigned w) {
                    const Input k0 = schema.input_at(r);
                    suites[r].insert(k0);
                    const Decision d0 = ctx.evaluate(workers[w], k0);
                    bool capped = false;
                    flipped[r] = detail::has_flipping_perturbation(ctx, workers[w], k0, d0,
                                                                   subset, cfg, &suites[r],
                                                                   capped);
                    capped_any[r] = capped;
                });
        } catch (const ProtocolError& e) {
            detail::abort_score(e, ScoreKind::causal, subset, cfg.seed, ctx.evaluations(),
                                ctx.hits());
        }
        std::uint64_t flips = 0;
        bool capped = false;
        for (std::size_t r = 0; r < domain; ++r) {
            flips += flipped[r] ? 1 : 0;
            capped |= capped_any[r] != 0;
            for (const auto& k : suites[r].inputs()) out.suite.insert(k);
        }
        out.result.score = static_cast<double>(flips) / static_cast<double>(domain);
        out.result.exact = !capped;
        out.result.lower_bound = capped;
        out.result.margin = 0.0;
        if (capped)
            out.result.warnings.push_back("perturbation cap reached; score is a lower bound");
    } else {
        RngStream rng = StreamKey(cfg.seed, StreamTag::causal_outer)
                            .absorb_range(subset.indices)
                            .stream();
        AdaptiveEstimator est;
        bool capped = false;
        const PartialAssignment free = PartialAssignment::none();
        try {
            do {
                const Input k0 = random_input(schema, free, rng);
                out.suite.insert(k0);
                const Decision d0 = ctx.evaluate(k0);
                bool this_capped = false;
                est.observe(detail::has_flipping_perturbation(ctx, subject, k0, d0, subset, cfg,
                                                              &out.suite, this_capped));
                capped |= this_capped;
            } while (!should_stop(est, cfg));
        } catch (const ProtocolError& e) {
            detail::abort_score(e, ScoreKind::causal, subset, cfg.seed, ctx.evaluations(),
                                ctx.hits());
        }
        out.result.score = est.proportion();
        out.result.confidence = cfg.confidence;
        out.result.epsilon = cfg.epsilon;
        out.result.margin = margin_of_error(est, cfg.confidence);
        out.result.lower_bound = capped;
        if (capped)
            out.result.warnings.push_back("perturbation cap reached; score is a lower bound");
        if (est.samples >= cfg.max_samples && *out.result.margin >= cfg.epsilon)
            out.result.warnings.push_back("hit max_samples before reaching the error margin");
    }
    out.result.tests_generated = ctx.evaluations();
    out.result.cache_hits = ctx.hits();
    return out;
}

// --- apparent scores --------------------------------------------------------------

/// Group score over a test suite instead of the full domain: suite members
/// are grouped by their subset assignment, empty groups are skipped, and no
/// confidence is reported.
inline ScoreResult apparent_group_score(const Subject& subject, const Schema& schema,
                                        const CharSubset& subset, const TestSuite& suite,
                                        EvalCache* cache, DeterminismCheck* verify = nullptr) {
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("apparent group score needs a non-empty subset");
    if (suite.empty()) throw InvalidArgument("apparent group score needs a non-empty suite");

    ScoreResult result;
    result.kind = ScoreKind::apparent_group;
    result.subset = subset;

    EvalContext ctx(subject, schema, cache, verify);
    std::map<std::vector<std::uint32_t>, GroupStat> groups;
    try {
        for (const auto& k : suite.inputs()) {
            schema.check_input(k);
            std::vector<std::uint32_t> assignment(subset.size());
            for (std::size_t i = 0; i < subset.size(); ++i)
                assignment[i] = k.values[subset.indices[i]];
            auto& stat = groups[assignment];
            stat.observe(ctx.evaluate(k));
        }
    } catch (const ProtocolError& e) {
        detail::abort_score(e, ScoreKind::apparent_group, subset, 0, ctx.evaluations(),
                            ctx.hits());
    }

    double max_p = 0.0, min_p = 1.0;
    for (auto& [assignment, stat] : groups) {
        stat.assignment = assignment;
        stat.key = detail::group_key(schema, subset, assignment);
        stat.p = static_cast<double>(stat.positives) / static_cast<double>(stat.samples);
        stat.exact = true;
        max_p = std::max(max_p, stat.p);
        min_p = std::min(min_p, stat.p);
        result.groups.push_back(stat);
    }
    result.score = max_p - min_p;
    result.exact = true;
    result.tests_generated = ctx.evaluations();
    result.cache_hits = ctx.hits();
    return result;
}

/// Causal score restricted to a test suite: counts members with a
/// counterpart in the suite that agrees outside the subset but decides
/// differently. The counterpart must itself belong to the suite.
inline ScoreResult apparent_causal_score(const Subject& subject, const Schema& schema,
                                         const CharSubset& subset, const TestSuite& suite,
                                         EvalCache* cache, DeterminismCheck* verify = nullptr) {
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("apparent causal score needs a non-empty subset");
    if (suite.empty()) throw InvalidArgument("apparent causal score needs a non-empty suite");

    ScoreResult result;
    result.kind = ScoreKind::apparent_causal;
    result.subset = subset;

    EvalContext ctx(subject, schema, cache, verify);
    // bucket by the values outside the subset; a member discriminates iff its
    // bucket is not decision-uniform
    std::map<std::vector<std::uint32_t>, std::pair<std::uint64_t, std::uint64_t>> buckets;
    try {
        for (const auto& k : suite.inputs()) {
            schema.check_input(k);
            std::vector<std::uint32_t> outside;
            outside.reserve(schema.size() - subset.size());
            for (std::size_t i = 0; i < schema.size(); ++i)
                if (!subset.contains(static_cast<std::uint32_t>(i)))
                    outside.push_back(k.values[i]);
            auto& [trues, falses] = buckets[outside];
            if (ctx.evaluate(k))
                ++trues;
            else
                ++falses;
        }
    } catch (const ProtocolError& e) {
        detail::abort_score(e, ScoreKind::apparent_causal, subset, 0, ctx.evaluations(),
                            ctx.hits());
    }
    std::uint64_t discriminated = 0;
    for (const auto& [outside, counts] : buckets)
        if (counts.first > 0 && counts.second > 0) discriminated += counts.first + counts.second;
    result.score = static_cast<double>(discriminated) / static_cast<double>(suite.size());
    result.exact = true;
    result.tests_generated = ctx.evaluations();
    result.cache_hits = ctx.hits();
    return result;
}

/// Causal score over an operational profile: base inputs are drawn from the
/// profile, perturbations range over the full label sets (they may leave the
/// profile's support), and sampling stops adaptively. No confidence is
/// reported: the result is only as representative as the profile.
inline ScoreResult apparent_causal_score(const Subject& subject, const Schema& schema,
                                         const CharSubset& subset,
                                         const OperationalProfile& profile,
                                         const SamplingConfig& cfg, EvalCache* cache,
                                         DeterminismCheck* verify = nullptr) {
    cfg.check();
    subset.check_for(schema);
    if (subset.empty()) throw InvalidArgument("apparent causal score needs a non-empty subset");
    profile.check_for(schema);

    ScoreResult result;
    result.kind = ScoreKind::apparent_causal;
    result.subset = subset;
    result.seed = cfg.seed;

    EvalContext ctx(subject, schema, cache, verify);
    RngStream rng = StreamKey(cfg.seed, StreamTag::profile_sampler)
                        .absorb_range(subset.indices)
                        .stream();
    AdaptiveEstimator est;
    bool capped = false;
    try {
        do {
            const Input k0 = profile.sample(schema, rng);
            const Decision d0 = ctx.evaluate(k0);
            bool this_capped = false;
            est.observe(detail::has_flipping_perturbation(ctx, subject, k0, d0, subset, cfg,
                                                          nullptr, this_capped));
            capped |= this_capped;
        } while (!should_stop(est, cfg));
    } catch (const ProtocolError& e) {
        detail::abort_score(e, ScoreKind::apparent_causal, subset, cfg.seed, ctx.evaluations(),
                            ctx.hits());
    }
    result.score = est.proportion();
    result.lower_bound = capped;
    if (capped) result.warnings.push_back("perturbation cap reached; score is a lower bound");
    result.tests_generated = ctx.evaluations();
    result.cache_hits = ctx.hits();
    return result;
}

} // namespace fairprobe
