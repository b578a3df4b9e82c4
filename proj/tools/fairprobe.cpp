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

// Command-line front end. Exit codes: 0 success, 1 usage/configuration,
// 2 subject or protocol failure, 3 schema/suite parse failure, 4 bound
// exceeded.

#include <fstream>
#include <memory>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairprobe/fairprobe.hpp"

namespace {

using namespace fairprobe;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonArgs {
    std::string schema_path;
    std::string subject_command;
    std::string fixture_spec;
    std::string chars;
    double confidence = 0.99;
    double epsilon = 0.05;
    std::uint64_t seed = 0;
    std::string report_path;
    bool verify_determinism = false;
    double verify_fraction = 0.01;
    unsigned parallel = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_sampling) {
    cmd->add_option("--schema", args.schema_path, "Input schema file (JSON)")->required();
    auto* subject =
        cmd->add_option("--subject", args.subject_command,
                        "Subject command line; spawned once and driven over stdin/stdout");
    auto* fixture = cmd->add_option("--fixture", args.fixture_spec,
                                    "Built-in subject spec, e.g. xor:0:1 or fraction:0:0.23,0.65");
    subject->excludes(fixture);
    fixture->excludes(subject);
    if (with_sampling) {
        cmd->add_option("--conf", args.confidence, "Confidence level")->capture_default_str();
        cmd->add_option("--eps", args.epsilon, "Error margin")->capture_default_str();
    }
    cmd->add_option("--seed", args.seed, "Random seed")->capture_default_str();
    cmd->add_option("--report", args.report_path, "Report destination (default stdout)");
    cmd->add_flag("--verify-determinism", args.verify_determinism,
                  "Re-evaluate a fraction of cache hits and abort on a mismatch");
    cmd->add_option("--verify-fraction", args.verify_fraction,
                    "Fraction of cache hits to re-evaluate under --verify-determinism")
        ->capture_default_str();
    cmd->add_option("--parallel", args.parallel, "Worker threads")->capture_default_str();
}

Schema load_schema(const CommonArgs& args) { return parse_schema(read_file(args.schema_path)); }

Subject make_subject(const CommonArgs& args, const Schema& schema) {
    if (!args.fixture_spec.empty()) return make_fixture_subject(args.fixture_spec, schema);
    // external subjects are treated as non-reentrant: parallel workers share
    // the one process and requests to it are serialized
    if (!args.subject_command.empty()) return Subject::process(args.subject_command);
    throw InvalidArgument("either --subject or --fixture is required");
}

CharSubset parse_chars(const CommonArgs& args, const Schema& schema) {
    if (args.chars.empty()) throw InvalidArgument("--chars is required");
    std::vector<std::string> names;
    std::stringstream ss(args.chars);
    std::string item;
    while (std::getline(ss, item, ',')) names.push_back(item);
    return CharSubset::from_names(schema, names);
}

SamplingConfig sampling_config(const CommonArgs& args) {
    SamplingConfig cfg;
    cfg.confidence = args.confidence;
    cfg.epsilon = args.epsilon;
    cfg.seed = args.seed;
    cfg.workers = args.parallel;
    cfg.check();
    return cfg;
}

void emit(const nlohmann::ordered_json& doc, const CommonArgs& args) {
    if (args.report_path.empty()) {
        write_report(doc, std::cout);
        return;
    }
    std::ofstream out(args.report_path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write report to '" + args.report_path + "'");
    write_report(doc, out);
}

std::unique_ptr<DeterminismCheck> make_verify(const CommonArgs& args) {
    if (!args.verify_determinism) return nullptr;
    return std::make_unique<DeterminismCheck>(args.verify_fraction, args.seed);
}

int run_score(const CommonArgs& args, ScoreKind kind) {
    const Schema schema = load_schema(args);
    const Subject subject = make_subject(args, schema);
    const CharSubset subset = parse_chars(args, schema);
    const SamplingConfig cfg = sampling_config(args);
    EvalCache cache;
    auto verify = make_verify(args);
    auto out = kind == ScoreKind::group
                   ? group_score(subject, schema, subset, cfg, &cache, verify.get())
                   : causal_score(subject, schema, subset, cfg, &cache, verify.get());
    for (const auto& w : out.result.warnings) std::cerr << "warning: " << w << "\n";
    emit(report_json(out.result, schema), args);
    return 0;
}

int run_apparent(const CommonArgs& args, const std::string& kind, const std::string& suite_path,
                 const std::string& profile_path) {
    const Schema schema = load_schema(args);
    const Subject subject = make_subject(args, schema);
    const CharSubset subset = parse_chars(args, schema);
    EvalCache cache;
    auto verify = make_verify(args);
    DeterminismCheck* verify_ptr = verify.get();

    if (suite_path.empty() == profile_path.empty())
        throw InvalidArgument("exactly one of --suite or --profile is required");

    ScoreResult result;
    if (!suite_path.empty()) {
        std::ifstream in(suite_path, std::ios::binary);
        if (!in) throw ParseError("cannot open '" + suite_path + "'");
        const TestSuite suite = read_suite_csv(in, schema);
        result = kind == "group"
                     ? apparent_group_score(subject, schema, subset, suite, &cache, verify_ptr)
                     : apparent_causal_score(subject, schema, subset, suite, &cache, verify_ptr);
    } else {
        if (kind == "group")
            throw InvalidArgument("apparent group scoring takes a --suite, not a --profile");
        const auto profile = parse_profile(read_file(profile_path), schema);
        result = apparent_causal_score(subject, schema, subset, profile, sampling_config(args),
                                       &cache, verify_ptr);
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    emit(report_json(result, schema), args);
    return 0;
}

int run_search(const CommonArgs& args, const std::string& kind, double theta,
               std::size_t max_subset_size, bool group_shortcut) {
    const Schema schema = load_schema(args);
    const Subject subject = make_subject(args, schema);
    SearchConfig cfg;
    cfg.theta = theta;
    cfg.kind = kind == "group" ? ScoreKind::group : ScoreKind::causal;
    cfg.max_subset_size = max_subset_size;
    cfg.sampling = sampling_config(args);
    cfg.use_group_shortcut = group_shortcut;
    EvalCache cache;
    auto verify = make_verify(args);
    auto result = discrimination_search(subject, schema, cfg, &cache, verify.get());
    emit(report_json(result, schema, cfg.kind, args.seed), args);
    return 0;
}

int run_oracle(const CommonArgs& args, const std::string& kind, std::optional<double> theta,
               std::uint64_t domain_bound) {
    const Schema schema = load_schema(args);
    const Subject subject = make_subject(args, schema);
    EvalCache cache;
    const ScoreKind score_kind = kind == "group" ? ScoreKind::group : ScoreKind::causal;
    if (theta) {
        auto result = exhaustive_search(subject, schema, *theta, score_kind, &cache,
                                        /*prune=*/false, domain_bound);
        emit(report_json(result, schema, score_kind, args.seed), args);
        return 0;
    }
    const CharSubset subset = parse_chars(args, schema);
    auto o = exhaustive_score(score_kind, subject, schema, subset, &cache, domain_bound);
    emit(report_json(to_score_result(o, score_kind, subset, o.tests, o.cache_hits), schema),
         args);
    return 0;
}

/// Speaks the subject wire protocol on stdin/stdout for a built-in fixture.
int run_fixture_server(const std::string& spec_text, const std::string& schema_path) {
    const Schema schema = parse_schema(read_file(schema_path));
    const FixtureSpec spec = FixtureSpec::parse(spec_text);
    spec.check_for(schema);

    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        if (cells.size() != schema.size()) {
            std::cerr << "fixture: bad request line: " << line << "\n";
            return 2;
        }
        Input k;
        k.values.resize(schema.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& labels = schema.characteristic(i).labels;
            auto it = std::find(labels.begin(), labels.end(), cells[i]);
            if (it == labels.end()) {
                std::cerr << "fixture: unknown label '" << cells[i] << "' in request: " << line
                          << "\n";
                return 2;
            }
            k.values[i] = static_cast<std::uint32_t>(it - labels.begin());
        }
        std::cout << (fixture_decide(spec, k, schema) ? "true" : "false") << "\n" << std::flush;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Black-box discrimination measurement for decision software"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* group = app.add_subcommand("group", "Group discrimination score for --chars");
    add_common(group, args, true);
    group->add_option("--chars", args.chars, "Comma-separated characteristic names")->required();

    auto* causal = app.add_subcommand("causal", "Causal discrimination score for --chars");
    add_common(causal, args, true);
    causal->add_option("--chars", args.chars, "Comma-separated characteristic names")->required();

    auto* apparent =
        app.add_subcommand("apparent", "Apparent score over a test suite or profile");
    std::string apparent_kind = "group";
    std::string suite_path, profile_path;
    add_common(apparent, args, true);
    apparent->add_option("--chars", args.chars, "Comma-separated characteristic names")
        ->required();
    apparent->add_option("--kind", apparent_kind, "Score kind: group or causal")
        ->check(CLI::IsMember({"group", "causal"}))
        ->capture_default_str();
    apparent->add_option("--suite", suite_path, "Test-suite CSV file");
    apparent->add_option("--profile", profile_path, "Operational profile (JSON)");

    auto* search = app.add_subcommand("search", "All minimal discriminating subsets");
    std::string search_kind = "causal";
    double theta = 0.75;
    std::size_t max_subset_size = 0;
    bool group_shortcut = false;
    add_common(search, args, true);
    search->add_option("--threshold", theta, "Discrimination threshold")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    search->add_option("--kind", search_kind, "Score kind: group or causal")
        ->check(CLI::IsMember({"group", "causal"}))
        ->capture_default_str();
    search->add_option("--max-subset-size", max_subset_size,
                       "Largest subset size to consider (0 = all)")
        ->capture_default_str();
    search->add_flag("--group-shortcut", group_shortcut,
                     "In causal searches, accept subsets whose group score already "
                     "reaches the threshold without a causal run");

    auto* oracle = app.add_subcommand(
        "oracle", "Exact scores by full enumeration (small domains only)");
    std::string oracle_kind = "group";
    double oracle_theta = -1.0;
    std::uint64_t domain_bound = kDefaultOracleDomainBound;
    add_common(oracle, args, false);
    oracle->add_option("--chars", args.chars, "Comma-separated characteristic names");
    oracle->add_option("--kind", oracle_kind, "Score kind: group or causal")
        ->check(CLI::IsMember({"group", "causal"}))
        ->capture_default_str();
    oracle->add_option("--threshold", oracle_theta,
                       "Run an exhaustive unpruned search at this threshold instead of "
                       "scoring --chars");
    oracle->add_option("--domain-bound", domain_bound, "Largest |K| to enumerate")
        ->capture_default_str();

    auto* fixture = app.add_subcommand(
        "fixture", "Serve a built-in fixture over the subject wire protocol");
    std::string fixture_spec_text, fixture_schema_path;
    fixture->add_option("spec", fixture_spec_text, "Fixture spec, e.g. echo-char:0")->required();
    fixture->add_option("--schema", fixture_schema_path, "Input schema file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, std::cout, std::cerr);
        return code == 0 ? 0 : 1; // usage problems are exit 1, --help is 0
    }

    try {
        if (group->parsed()) return run_score(args, ScoreKind::group);
        if (causal->parsed()) return run_score(args, ScoreKind::causal);
        if (apparent->parsed()) return run_apparent(args, apparent_kind, suite_path, profile_path);
        if (search->parsed())
            return run_search(args, search_kind, theta, max_subset_size, group_shortcut);
        if (oracle->parsed())
            return run_oracle(args, oracle_kind,
                              oracle_theta >= 0.0 ? std::optional<double>(oracle_theta)
                                                  : std::nullopt,
                              domain_bound);
        if (fixture->parsed()) return run_fixture_server(fixture_spec_text, fixture_schema_path);
    } catch (const DeterminismError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const BoundError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
