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
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "fairprobe/engine.hpp"
#include "fairprobe/schema.hpp"
#include "fairprobe/search.hpp"

namespace fairprobe {

// Canonical JSON reports. Key order is fixed, absent fields are omitted
// (never null), and numbers print in shortest round-trip form, so identical
// runs produce byte-identical documents.

inline constexpr int kReportVersion = 1;

/// FNV-1a 64-bit digest of the canonical schema document, as 16 hex digits.
inline std::string schema_digest(const Schema& schema) {
    const std::string doc = serialize_schema(schema);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : doc) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

namespace detail {

inline nlohmann::ordered_json subset_names(const Schema& schema, const CharSubset& subset) {
    auto arr = nlohmann::ordered_json::array();
    for (auto i : subset.indices) arr.push_back(schema.characteristic(i).name);
    return arr;
}

inline nlohmann::ordered_json groups_json(const std::vector<GroupStat>& groups) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const auto& g : groups) {
        nlohmann::ordered_json entry;
        entry["p"] = g.p;
        entry["r"] = g.samples;
        entry["margin"] = g.margin;
        entry["exact"] = g.exact;
        if (g.hit_max_samples) entry["hit_max_samples"] = true;
        obj[g.key] = std::move(entry);
    }
    return obj;
}

} // namespace detail

/// Report for a single score measurement.
inline nlohmann::ordered_json report_json(const ScoreResult& result, const Schema& schema) {
    nlohmann::ordered_json doc;
    doc["version"] = kReportVersion;
    doc["mode"] = to_string(result.kind);
    doc["schema_digest"] = schema_digest(schema);
    doc["subset"] = detail::subset_names(schema, result.subset);
    doc["score"] = result.score;
    if (result.margin) doc["margin"] = *result.margin;
    if (result.confidence) doc["confidence"] = *result.confidence;
    doc["exact"] = result.exact;
    if (result.kind == ScoreKind::causal || result.kind == ScoreKind::apparent_causal)
        doc["lower_bound"] = result.lower_bound;
    if (!result.groups.empty()) doc["groups"] = detail::groups_json(result.groups);
    nlohmann::ordered_json stats;
    stats["tests_generated"] = result.tests_generated;
    stats["cache_hits"] = result.cache_hits;
    doc["stats"] = std::move(stats);
    doc["seed"] = result.seed;
    return doc;
}

/// Report for a discrimination search.
inline nlohmann::ordered_json report_json(const SearchResult& result, const Schema& schema,
                                          ScoreKind kind, std::uint64_t seed) {
    nlohmann::ordered_json doc;
    doc["version"] = kReportVersion;
    doc["mode"] = std::string("search-") + to_string(kind);
    doc["schema_digest"] = schema_digest(schema);
    auto sets = nlohmann::ordered_json::array();
    for (const auto& m : result.minimal_sets) {
        nlohmann::ordered_json entry;
        entry["subset"] = detail::subset_names(schema, m.subset);
        entry["score"] = m.score.score;
        entry["kind"] = to_string(m.score.kind);
        if (m.score.margin) entry["margin"] = *m.score.margin;
        entry["exact"] = m.score.exact;
        sets.push_back(std::move(entry));
    }
    doc["minimal_sets"] = std::move(sets);
    nlohmann::ordered_json stats;
    stats["tests_generated"] = result.tests_total;
    stats["cache_hits"] = result.cache_hits;
    stats["subsets_evaluated"] = result.subsets_evaluated;
    stats["subsets_pruned"] = result.subsets_pruned;
    doc["stats"] = std::move(stats);
    doc["seed"] = seed;
    return doc;
}

/// Writes a report document: two-space indentation, trailing newline.
inline void write_report(const nlohmann::ordered_json& doc, std::ostream& out) {
    out << doc.dump(2) << '\n';
    if (!out) throw InvalidArgument("report destination is not writable");
}

} // namespace fairprobe
