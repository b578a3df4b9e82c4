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
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairprobe/errors.hpp"

namespace fairprobe {

// Input schemas: an ordered sequence of named categorical characteristics,
// each with a fixed ordered label set. Inputs are full valuations stored as
// label *indices*; label text only appears at the wire boundary (schema
// files, suite CSVs, the subject line protocol).

/// One categorical characteristic.
struct Characteristic {
    std::string name;
    std::vector<std::string> labels;
};

/// A full valuation: one label index per characteristic, in schema order.
struct Input {
    std::vector<std::uint32_t> values;

    friend bool operator==(const Input& a, const Input& b) { return a.values == b.values; }
    friend bool operator!=(const Input& a, const Input& b) { return !(a == b); }
    friend bool operator<(const Input& a, const Input& b) { return a.values < b.values; }
};

struct InputHash {
    std::size_t operator()(const Input& k) const {
        std::uint64_t h = 0x811C9DC5ULL;
        for (std::uint32_t v : k.values) h = mix_step(h, v);
        return static_cast<std::size_t>(h);
    }
    static std::uint64_t mix_step(std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

namespace detail {

inline bool has_forbidden_char(const std::string& s) {
    return s.find(',') != std::string::npos || s.find('\n') != std::string::npos ||
           s.find('\r') != std::string::npos;
}

inline bool has_edge_whitespace(const std::string& s) {
    if (s.empty()) return false;
    auto is_ws = [](char c) { return c == ' ' || c == '\t'; };
    return is_ws(s.front()) || is_ws(s.back());
}

} // namespace detail

/// A validated input schema. Immutable after construction; safe to share.
class Schema {
public:
    explicit Schema(std::vector<Characteristic> characteristics)
        : chars_(std::move(characteristics)) {
        validate();
    }

    std::size_t size() const { return chars_.size(); }
    const Characteristic& characteristic(std::size_t i) const { return chars_[i]; }
    const std::vector<Characteristic>& characteristics() const { return chars_; }
    std::uint32_t label_count(std::size_t i) const {
        return static_cast<std::uint32_t>(chars_[i].labels.size());
    }

    /// Index of the named characteristic, if present.
    std::optional<std::size_t> index_of(const std::string& name) const {
        for (std::size_t i = 0; i < chars_.size(); ++i)
            if (chars_[i].name == name) return i;
        return std::nullopt;
    }

    /// |K|, saturated at uint64 max when the product overflows.
    std::uint64_t domain_size() const {
        std::uint64_t total = 1;
        for (const auto& c : chars_) {
            const auto m = static_cast<std::uint64_t>(c.labels.size());
            if (total > std::numeric_limits<std::uint64_t>::max() / m)
                return std::numeric_limits<std::uint64_t>::max();
            total *= m;
        }
        return total;
    }

    bool valid_input(const Input& k) const {
        if (k.values.size() != chars_.size()) return false;
        for (std::size_t i = 0; i < chars_.size(); ++i)
            if (k.values[i] >= chars_[i].labels.size()) return false;
        return true;
    }

    void check_input(const Input& k) const {
        if (!valid_input(k)) throw InvalidArgument("input does not fit schema");
    }

    // Canonical enumeration order of K: the last characteristic varies
    // fastest (odometer order). Usable only while |K| is not saturated.
    std::uint64_t rank_of(const Input& k) const {
        std::uint64_t r = 0;
        for (std::size_t i = 0; i < chars_.size(); ++i)
            r = r * chars_[i].labels.size() + k.values[i];
        return r;
    }

    Input input_at(std::uint64_t rank) const {
        Input k;
        k.values.resize(chars_.size());
        for (std::size_t i = chars_.size(); i-- > 0;) {
            const auto m = static_cast<std::uint64_t>(chars_[i].labels.size());
            k.values[i] = static_cast<std::uint32_t>(rank % m);
            rank /= m;
        }
        return k;
    }

    /// Request line for the subject wire protocol: label texts joined by ','.
    std::string wire_line(const Input& k) const {
        std::string line;
        for (std::size_t i = 0; i < chars_.size(); ++i) {
            if (i) line += ',';
            line += chars_[i].labels[k.values[i]];
        }
        return line;
    }

private:
    void validate() const {
        if (chars_.empty()) throw ParseError("schema has no characteristics");
        std::unordered_set<std::string> names;
        for (std::size_t i = 0; i < chars_.size(); ++i) {
            const auto& c = chars_[i];
            if (c.name.empty())
                throw ParseError("characteristic " + std::to_string(i) + " has an empty name");
            if (detail::has_forbidden_char(c.name) || detail::has_edge_whitespace(c.name))
                throw ParseError("characteristic name '" + c.name +
                                 "' contains a comma, newline, or edge whitespace");
            if (!names.insert(c.name).second)
                throw ParseError("duplicate characteristic name '" + c.name + "'");
            if (c.labels.empty())
                throw ParseError("characteristic '" + c.name + "' has an empty label set");
            std::unordered_set<std::string> labels;
            for (const auto& l : c.labels) {
                if (l.empty())
                    throw ParseError("characteristic '" + c.name + "' has an empty label");
                if (detail::has_forbidden_char(l))
                    throw ParseError("label '" + l + "' of characteristic '" + c.name +
                                     "' contains a comma or newline");
                if (!labels.insert(l).second)
                    throw ParseError("duplicate label '" + l + "' in characteristic '" + c.name +
                                     "'");
            }
        }
    }

    std::vector<Characteristic> chars_;
};

/// A sorted, deduplicated set of characteristic positions.
struct CharSubset {
    std::vector<std::uint32_t> indices;

    CharSubset() = default;
    CharSubset(std::initializer_list<std::uint32_t> idx)
        : CharSubset(std::vector<std::uint32_t>(idx)) {}
    explicit CharSubset(std::vector<std::uint32_t> idx) : indices(std::move(idx)) {
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    }

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
    bool contains(std::uint32_t i) const {
        return std::binary_search(indices.begin(), indices.end(), i);
    }

    /// True iff every index of this set is also in `other`.
    bool subset_of(const CharSubset& other) const {
        return std::includes(other.indices.begin(), other.indices.end(), indices.begin(),
                             indices.end());
    }

    void check_for(const Schema& schema) const {
        for (auto i : indices)
            if (i >= schema.size())
                throw InvalidArgument("characteristic index " + std::to_string(i) +
                                      " out of range");
    }

    /// Resolves a list of characteristic names against a schema.
    static CharSubset from_names(const Schema& schema, const std::vector<std::string>& names) {
        std::vector<std::uint32_t> idx;
        for (const auto& n : names) {
            auto i = schema.index_of(n);
            if (!i) throw InvalidArgument("unknown characteristic '" + n + "'");
            idx.push_back(static_cast<std::uint32_t>(*i));
        }
        CharSubset s(std::move(idx));
        if (s.indices.size() != names.size())
            throw InvalidArgument("duplicate characteristic in subset");
        return s;
    }

    friend bool operator==(const CharSubset& a, const CharSubset& b) {
        return a.indices == b.indices;
    }
    friend bool operator!=(const CharSubset& a, const CharSubset& b) { return !(a == b); }
    friend bool operator<(const CharSubset& a, const CharSubset& b) {
        return a.indices < b.indices;
    }
};

// --- schema document (JSON wire format) ------------------------------------
//
// {"characteristics":[{"name":"race","values":["green","purple"]}, ...]}
// Keys are exactly `characteristics`, `name`, `values`; anything else is an
// error. Characteristic order in the document is significant.

inline Schema parse_schema(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("schema document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("schema document must be a JSON object");
    for (const auto& item : doc.items())
        if (item.key() != "characteristics")
            throw ParseError("unknown key '" + item.key() + "' in schema document");
    if (!doc.contains("characteristics") || !doc["characteristics"].is_array())
        throw ParseError("schema document must contain a 'characteristics' array");

    std::vector<Characteristic> chars;
    std::size_t pos = 0;
    for (const auto& entry : doc["characteristics"]) {
        if (!entry.is_object())
            throw ParseError("characteristic " + std::to_string(pos) + " must be an object");
        for (const auto& item : entry.items())
            if (item.key() != "name" && item.key() != "values")
                throw ParseError("unknown key '" + item.key() + "' in characteristic " +
                                 std::to_string(pos));
        if (!entry.contains("name") || !entry["name"].is_string())
            throw ParseError("characteristic " + std::to_string(pos) +
                             " is missing a string 'name'");
        if (!entry.contains("values") || !entry["values"].is_array())
            throw ParseError("characteristic " + std::to_string(pos) +
                             " is missing a 'values' array");
        Characteristic c;
        c.name = entry["name"].get<std::string>();
        for (const auto& v : entry["values"]) {
            if (!v.is_string())
                throw ParseError("non-string label in characteristic '" + c.name + "'");
            c.labels.push_back(v.get<std::string>());
        }
        chars.push_back(std::move(c));
        ++pos;
    }
    return Schema(std::move(chars));
}

/// Canonical document: compact JSON, keys in the order shown above.
inline std::string serialize_schema(const Schema& schema) {
    nlohmann::ordered_json doc;
    doc["characteristics"] = nlohmann::ordered_json::array();
    for (const auto& c : schema.characteristics()) {
        nlohmann::ordered_json entry;
        entry["name"] = c.name;
        entry["values"] = c.labels;
        doc["characteristics"].push_back(std::move(entry));
    }
    return doc.dump();
}

// --- subset enumeration -----------------------------------------------------

/// Calls `fn` with each k-combination of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_subset_of_size(std::size_t n, std::size_t k, Fn&& fn) {
    if (k == 0 || k > n) return;
    std::vector<std::uint32_t> comb(k);
    for (std::size_t i = 0; i < k; ++i) comb[i] = static_cast<std::uint32_t>(i);
    while (true) {
        fn(comb);
        // advance to the next combination
        std::size_t i = k;
        while (i-- > 0) {
            if (comb[i] != i + n - k) {
                ++comb[i];
                for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
    }
}

/// All non-empty subsets up to `max_size`, size-ascending then lexicographic.
inline std::vector<CharSubset> enumerate_subsets(const Schema& schema, std::size_t max_size) {
    const std::size_t n = schema.size();
    if (max_size < 1 || max_size > n)
        throw InvalidArgument("max_size must be between 1 and " + std::to_string(n));
    std::vector<CharSubset> out;
    for (std::size_t k = 1; k <= max_size; ++k)
        for_each_subset_of_size(n, k, [&](const std::vector<std::uint32_t>& comb) {
            CharSubset s;
            s.indices = comb; // already sorted and unique
            out.push_back(std::move(s));
        });
    return out;
}

// --- assignments over a subset ----------------------------------------------

/// Number of distinct value assignments over `subset` (saturating).
inline std::uint64_t assignment_count(const Schema& schema, const CharSubset& subset) {
    std::uint64_t total = 1;
    for (auto i : subset.indices) {
        const auto m = static_cast<std::uint64_t>(schema.label_count(i));
        if (total > std::numeric_limits<std::uint64_t>::max() / m)
            return std::numeric_limits<std::uint64_t>::max();
        total *= m;
    }
    return total;
}

/// Size of the constrained domain: inputs agreeing with a fixed assignment
/// over `subset` (saturating).
inline std::uint64_t free_domain_size(const Schema& schema, const CharSubset& subset) {
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (subset.contains(static_cast<std::uint32_t>(i))) continue;
        const auto m = static_cast<std::uint64_t>(schema.label_count(i));
        if (total > std::numeric_limits<std::uint64_t>::max() / m)
            return std::numeric_limits<std::uint64_t>::max();
        total *= m;
    }
    return total;
}

/// Assignment `rank` over `subset`, odometer order (last index fastest).
inline std::vector<std::uint32_t> assignment_at(const Schema& schema, const CharSubset& subset,
                                                std::uint64_t rank) {
    std::vector<std::uint32_t> a(subset.size());
    for (std::size_t i = subset.size(); i-- > 0;) {
        const auto m = static_cast<std::uint64_t>(schema.label_count(subset.indices[i]));
        a[i] = static_cast<std::uint32_t>(rank % m);
        rank /= m;
    }
    return a;
}

/// Rank of the assignment formed by `input`'s values over `subset`.
inline std::uint64_t assignment_rank(const Schema& schema, const CharSubset& subset,
                                     const Input& input) {
    std::uint64_t r = 0;
    for (auto i : subset.indices) r = r * schema.label_count(i) + input.values[i];
    return r;
}

/// The input agreeing with `base` outside `subset` and carrying `assignment`
/// on it.
inline Input with_assignment(const Input& base, const CharSubset& subset,
                             const std::vector<std::uint32_t>& assignment) {
    Input k = base;
    for (std::size_t i = 0; i < subset.size(); ++i) k.values[subset.indices[i]] = assignment[i];
    return k;
}

} // namespace fairprobe
