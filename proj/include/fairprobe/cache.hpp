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

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairprobe/errors.hpp"
#include "fairprobe/rng.hpp"
#include "fairprobe/schema.hpp"
#include "fairprobe/subject.hpp"

namespace fairprobe {

// Memoizes subject evaluations keyed by the full input valuation. Entries
// never change once written. Concurrent misses for the same input are
// single-flight: one caller evaluates, the rest wait and count as hits.

class EvalCache {
public:
    struct Stats {
        std::uint64_t hits = 0;
        std::uint64_t misses = 0;
        std::uint64_t entries = 0;
    };

    EvalCache() = default;
    EvalCache(const EvalCache&) = delete;
    EvalCache& operator=(const EvalCache&) = delete;

    /// Cached decision for `input`, evaluating via `eval` on a miss.
    /// The second member of the result is true on a hit (no evaluation ran
    /// on behalf of this caller). The cache is not polluted when `eval`
    /// throws.
    template <typename EvalFn>
    std::pair<Decision, bool> get_or_eval(const Input& input, EvalFn&& eval) {
        std::unique_lock<std::mutex> lock(mutex_);
        while (true) {
            auto it = map_.find(input);
            if (it == map_.end()) break;
            if (it->second.ready) {
                ++hits_;
                return {it->second.value, true};
            }
            cv_.wait(lock); // another caller is evaluating this input
        }
        map_.emplace(input, Entry{});
        ++misses_;
        lock.unlock();

        Decision value;
        try {
            value = eval();
        } catch (...) {
            lock.lock();
            map_.erase(input);
            cv_.notify_all();
            throw;
        }

        lock.lock();
        auto it = map_.find(input);
        it->second.ready = true;
        it->second.value = value;
        cv_.notify_all();
        return {value, false};
    }

    /// Decision for `input` if already cached.
    std::optional<Decision> peek(const Input& input) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(input);
        if (it == map_.end() || !it->second.ready) return std::nullopt;
        return it->second.value;
    }

    Stats stats() const {
        std::lock_guard<std::mutex> lock(mutex_);
        Stats s;
        s.hits = hits_;
        s.misses = misses_;
        for (const auto& [k, e] : map_)
            if (e.ready) ++s.entries;
        return s;
    }

    /// Writes one record per entry: comma-joined label indices, tab, 0 or 1.
    /// Records are sorted by key so the file is reproducible.
    void save(std::ostream& out) const {
        std::vector<std::pair<Input, Decision>> rows;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            for (const auto& [k, e] : map_)
                if (e.ready) rows.emplace_back(k, e.value);
        }
        std::sort(rows.begin(), rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [k, d] : rows) {
            for (std::size_t i = 0; i < k.values.size(); ++i) {
                if (i) out << ',';
                out << k.values[i];
            }
            out << '\t' << (d ? '1' : '0') << '\n';
        }
    }

    /// Merges records previously written by save(). Does not touch the
    /// hit/miss counters.
    void load(std::istream& in) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos || tab + 2 != line.size() ||
                (line[tab + 1] != '0' && line[tab + 1] != '1'))
                throw ParseError("bad cache record on line " + std::to_string(line_no));
            Input k;
            std::size_t start = 0;
            while (start <= tab) {
                auto end = line.find(',', start);
                if (end == std::string::npos || end > tab) end = tab;
                try {
                    k.values.push_back(
                        static_cast<std::uint32_t>(std::stoul(line.substr(start, end - start))));
                } catch (const std::exception&) {
                    throw ParseError("bad cache record on line " + std::to_string(line_no));
                }
                start = end + 1;
            }
            std::lock_guard<std::mutex> lock(mutex_);
            auto [it, inserted] = map_.emplace(k, Entry{});
            it->second.ready = true;
            it->second.value = line[tab + 1] == '1';
        }
    }

private:
    struct Entry {
        bool ready = false;
        Decision value = false;
    };

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::unordered_map<Input, Entry, InputHash> map_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
};

inline EvalCache::Stats cache_stats(const EvalCache& cache) { return cache.stats(); }

/// Opt-in determinism verification: re-evaluates a fraction of cache hits
/// against the live subject and aborts the run on a mismatch.
class DeterminismCheck {
public:
    DeterminismCheck(double fraction, std::uint64_t seed)
        : fraction_(fraction),
          rng_(StreamKey(seed, StreamTag::determinism_check).stream()) {
        if (!(fraction >= 0.0 && fraction <= 1.0))
            throw InvalidArgument("verification fraction must be in [0, 1]");
    }

    void on_hit(const Subject& subject, const Input& input, const Schema& schema,
                Decision cached) {
        bool recheck;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            recheck = rng_.next_double() < fraction_;
        }
        if (!recheck) return;
        const Decision fresh = evaluate_raw(subject, input, schema);
        if (fresh != cached)
            throw DeterminismError("subject is not deterministic: cached " +
                                       std::string(cached ? "true" : "false") + ", got " +
                                       (fresh ? "true" : "false"),
                                   schema.wire_line(input));
        ++rechecked_;
    }

    std::uint64_t rechecked() const { return rechecked_.load(); }

private:
    double fraction_;
    std::mutex mutex_;
    RngStream rng_;
    std::atomic<std::uint64_t> rechecked_{0};
};

/// Memoized subject evaluation: a hit returns the stored decision without
/// touching the subject; a miss evaluates, stores, and returns.
inline Decision evaluate_cached(EvalCache& cache, const Subject& subject, const Input& input,
                                const Schema& schema, DeterminismCheck* verify = nullptr) {
    schema.check_input(input);
    auto [value, hit] =
        cache.get_or_eval(input, [&] { return evaluate_raw(subject, input, schema); });
    if (hit && verify) verify->on_hit(subject, input, schema, value);
    return value;
}

/// Shared evaluation path for one engine operation: dispatches through the
/// cache when one is attached and keeps per-operation counters that stay
/// correct when operations run concurrently on the same cache.
class EvalContext {
public:
    EvalContext(const Subject& subject, const Schema& schema, EvalCache* cache,
                DeterminismCheck* verify = nullptr)
        : subject_(subject), schema_(schema), cache_(cache), verify_(verify) {}

    Decision evaluate(const Subject& subject, const Input& input) {
        ++evals_;
        if (!cache_) return evaluate_raw(subject, input, schema_);
        auto [value, hit] =
            cache_->get_or_eval(input, [&] { return evaluate_raw(subject, input, schema_); });
        if (hit) {
            ++hits_;
            if (verify_) verify_->on_hit(subject, input, schema_, value);
        }
        return value;
    }

    Decision evaluate(const Input& input) { return evaluate(subject_, input); }

    const Subject& subject() const { return subject_; }
    const Schema& schema() const { return schema_; }
    std::uint64_t evaluations() const { return evals_.load(); }
    std::uint64_t hits() const { return hits_.load(); }

private:
    Subject subject_;
    const Schema& schema_;
    EvalCache* cache_;
    DeterminismCheck* verify_;
    std::atomic<std::uint64_t> evals_{0};
    std::atomic<std::uint64_t> hits_{0};
};

} // namespace fairprobe
