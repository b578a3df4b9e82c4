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
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fairprobe/errors.hpp"
#include "fairprobe/rng.hpp"
#include "fairprobe/schema.hpp"
#include "fairprobe/subject.hpp"

namespace fairprobe {

// Built-in deterministic subjects with analytically known discrimination.
// Specs are written as colon-separated text, e.g. on a schema whose
// characteristics are (race, age, idx):
//
//   const:true            always true
//   echo-char:0           true iff characteristic 0 has a non-zero label index
//   threshold:2:5         true iff characteristic 2's label index >= 5
//   xor:0:1               true iff exactly one of characteristics 0, 1 is non-zero
//   table:42              seeded random truth table over the whole domain
//   fraction:0:0.23,0.65  per-label true-fractions for characteristic 0,
//                         realized exactly through the last characteristic,
//                         which acts as an auxiliary index
//
// table:SEED maps the input with canonical rank r to the top bit of output r
// of the splitmix64 sequence seeded with SEED, so an independent
// implementation of splitmix64 reproduces the same subject.

struct FixtureSpec {
    enum class Kind { constant, echo_char, threshold, xor_chars, table, fraction };

    Kind kind = Kind::constant;
    bool const_value = true;
    std::uint32_t char_a = 0;
    std::uint32_t char_b = 0;
    std::uint32_t cutoff = 0;
    std::uint64_t table_seed = 0;
    std::vector<double> fractions;

    static FixtureSpec parse(const std::string& text) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : text) {
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        parts.push_back(cur);

        auto arity = [&](std::size_t n) {
            if (parts.size() != n + 1)
                throw InvalidArgument("fixture '" + parts[0] + "' takes " + std::to_string(n) +
                                      " argument(s): '" + text + "'");
        };
        FixtureSpec spec;
        try {
            if (parts[0] == "const") {
                arity(1);
                spec.kind = Kind::constant;
                if (parts[1] == "true")
                    spec.const_value = true;
                else if (parts[1] == "false")
                    spec.const_value = false;
                else
                    throw InvalidArgument("const fixture argument must be true or false");
            } else if (parts[0] == "echo-char") {
                arity(1);
                spec.kind = Kind::echo_char;
                spec.char_a = static_cast<std::uint32_t>(std::stoul(parts[1]));
            } else if (parts[0] == "threshold") {
                arity(2);
                spec.kind = Kind::threshold;
                spec.char_a = static_cast<std::uint32_t>(std::stoul(parts[1]));
                spec.cutoff = static_cast<std::uint32_t>(std::stoul(parts[2]));
            } else if (parts[0] == "xor") {
                arity(2);
                spec.kind = Kind::xor_chars;
                spec.char_a = static_cast<std::uint32_t>(std::stoul(parts[1]));
                spec.char_b = static_cast<std::uint32_t>(std::stoul(parts[2]));
            } else if (parts[0] == "table") {
                arity(1);
                spec.kind = Kind::table;
                spec.table_seed = std::stoull(parts[1]);
            } else if (parts[0] == "fraction") {
                arity(2);
                spec.kind = Kind::fraction;
                spec.char_a = static_cast<std::uint32_t>(std::stoul(parts[1]));
                std::stringstream ss(parts[2]);
                std::string item;
                while (std::getline(ss, item, ',')) spec.fractions.push_back(std::stod(item));
            } else {
                throw InvalidArgument("unknown fixture kind '" + parts[0] + "'");
            }
        } catch (const std::invalid_argument&) {
            throw InvalidArgument("bad fixture argument in '" + text + "'");
        } catch (const std::out_of_range&) {
            throw InvalidArgument("fixture argument out of range in '" + text + "'");
        }
        return spec;
    }

    std::string to_string() const {
        switch (kind) {
        case Kind::constant:
            return std::string("const:") + (const_value ? "true" : "false");
        case Kind::echo_char:
            return "echo-char:" + std::to_string(char_a);
        case Kind::threshold:
            return "threshold:" + std::to_string(char_a) + ":" + std::to_string(cutoff);
        case Kind::xor_chars:
            return "xor:" + std::to_string(char_a) + ":" + std::to_string(char_b);
        case Kind::table:
            return "table:" + std::to_string(table_seed);
        case Kind::fraction: {
            std::string s = "fraction:" + std::to_string(char_a) + ":";
            for (std::size_t i = 0; i < fractions.size(); ++i) {
                if (i) s += ',';
                std::ostringstream os;
                os << fractions[i];
                s += os.str();
            }
            return s;
        }
        }
        return "";
    }

    void check_for(const Schema& schema) const {
        const auto n = static_cast<std::uint32_t>(schema.size());
        switch (kind) {
        case Kind::constant:
            break;
        case Kind::echo_char:
            require(char_a < n, "echo-char index out of range");
            break;
        case Kind::threshold:
            require(char_a < n, "threshold characteristic out of range");
            require(cutoff <= schema.label_count(char_a), "threshold cutoff out of range");
            break;
        case Kind::xor_chars:
            require(char_a < n && char_b < n, "xor characteristic out of range");
            require(char_a != char_b, "xor characteristics must differ");
            break;
        case Kind::table:
            require(schema.domain_size() != std::numeric_limits<std::uint64_t>::max(),
                    "domain too large for a table fixture");
            break;
        case Kind::fraction: {
            require(n >= 2, "fraction fixture needs an auxiliary characteristic");
            require(char_a < n - 1,
                    "fraction characteristic must not be the auxiliary (last) one");
            require(fractions.size() == schema.label_count(char_a),
                    "fraction fixture needs one fraction per label of its characteristic");
            const double aux = static_cast<double>(schema.label_count(n - 1));
            for (double f : fractions) {
                require(f >= 0.0 && f <= 1.0, "fractions must lie in [0, 1]");
                const double cut = f * aux;
                require(std::abs(cut - std::round(cut)) <= 1e-9 * aux,
                        "fraction not exactly realizable with " +
                            std::to_string(schema.label_count(n - 1)) + " auxiliary labels");
            }
            break;
        }
        }
    }

private:
    static void require(bool ok, const std::string& message) {
        if (!ok) throw InvalidArgument("fixture/schema mismatch: " + message);
    }
};

/// Pure decision function for a fixture spec.
inline Decision fixture_decide(const FixtureSpec& spec, const Input& input,
                               const Schema& schema) {
    switch (spec.kind) {
    case FixtureSpec::Kind::constant:
        return spec.const_value;
    case FixtureSpec::Kind::echo_char:
        return input.values[spec.char_a] != 0;
    case FixtureSpec::Kind::threshold:
        return input.values[spec.char_a] >= spec.cutoff;
    case FixtureSpec::Kind::xor_chars:
        return (input.values[spec.char_a] != 0) != (input.values[spec.char_b] != 0);
    case FixtureSpec::Kind::table:
        return (splitmix64_at(spec.table_seed, schema.rank_of(input)) >> 63) != 0;
    case FixtureSpec::Kind::fraction: {
        const auto aux = static_cast<std::uint32_t>(schema.size() - 1);
        const double f = spec.fractions[input.values[spec.char_a]];
        const auto cut = static_cast<std::uint32_t>(
            std::llround(f * static_cast<double>(schema.label_count(aux))));
        return input.values[aux] < cut;
    }
    }
    return false;
}

/// Validates the spec against the schema and wraps it as an in-process
/// subject named after its canonical spec text.
inline Subject make_fixture_subject(const FixtureSpec& spec, const Schema& schema) {
    spec.check_for(schema);
    return Subject::function("fixture:" + spec.to_string(),
                             [spec](const Input& input, const Schema& s) {
                                 return fixture_decide(spec, input, s);
                             });
}

inline Subject make_fixture_subject(const std::string& spec_text, const Schema& schema) {
    return make_fixture_subject(FixtureSpec::parse(spec_text), schema);
}

} // namespace fairprobe
