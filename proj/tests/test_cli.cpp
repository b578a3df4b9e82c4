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

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace fairprobe;
using testutil::cli_path;
using testutil::shell_quote;
using testutil::run_command;
using testutil::TempDir;
using testutil::write_file;

namespace {

struct CliFixture {
    TempDir dir;
    std::string cli = cli_path();
    std::string schema_path;

    CliFixture() {
        REQUIRE(!cli.empty());
        const Schema schema = testutil::make_schema(
            {{"race", {"green", "purple"}}, {"age", {"lt40", "geq40"}}, {"c2", {"no", "yes"}}});
        schema_path = dir.file("schema.json");
        write_file(schema_path, serialize_schema(schema));
    }
};

} // namespace

TEST_CASE("cli: group happy path writes a report and exits 0") {
    CliFixture f;
    const auto r = run_command(f.cli + " group --schema " + shell_quote(f.schema_path) +
                               " --fixture echo-char:0 --chars race --conf 0.99 --eps 0.05 "
                               "--seed 42");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    REQUIRE(doc["mode"] == "group");
    REQUIRE(doc["score"] == 1.0);
    REQUIRE(doc["seed"] == 42);
}

TEST_CASE("cli: missing --schema is a usage error on stderr") {
    CliFixture f;
    const auto r = run_command(f.cli + " group --fixture const:true --chars race");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.out.empty());
    REQUIRE(!r.err.empty());
    REQUIRE_THAT(r.err, Catch::Matchers::ContainsSubstring("--schema"));
}

TEST_CASE("cli: search mirrors the threshold workflow") {
    CliFixture f;
    const auto r = run_command(f.cli + " search --schema " + shell_quote(f.schema_path) +
                               " --fixture echo-char:0 --kind causal --threshold 0.75 --seed 7");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    REQUIRE(doc["mode"] == "search-causal");
    REQUIRE(doc["minimal_sets"].size() == 1);
    REQUIRE(doc["minimal_sets"][0]["subset"][0] == "race");
    REQUIRE(doc["stats"]["subsets_pruned"] == 3);
}

TEST_CASE("cli: error exit codes") {
    CliFixture f;
    SECTION("malformed schema file is exit 3") {
        const std::string bad = f.dir.file("bad.json");
        write_file(bad, "{not json");
        const auto r = run_command(f.cli + " group --schema " + shell_quote(bad) +
                                   " --fixture const:true --chars race");
        REQUIRE(r.exit_code == 3);
    }
    SECTION("unknown characteristic is exit 1") {
        const auto r = run_command(f.cli + " group --schema " + shell_quote(f.schema_path) +
                                   " --fixture const:true --chars nope");
        REQUIRE(r.exit_code == 1);
    }
    SECTION("oracle bound exceeded is exit 4") {
        // 2*2*2 = 8 with a bound of 4
        const auto r = run_command(f.cli + " oracle --schema " + shell_quote(f.schema_path) +
                                   " --fixture const:true --chars race --domain-bound 4");
        REQUIRE(r.exit_code == 4);
    }
    SECTION("a crashing subject is exit 2") {
        const auto r = run_command(f.cli + " group --schema " + shell_quote(f.schema_path) +
                                   " --subject 'sh -c \"exit 7\"' --chars race");
        REQUIRE(r.exit_code == 2);
    }
    SECTION("a subject speaking garbage is exit 2") {
        const auto r =
            run_command(f.cli + " causal --schema " + shell_quote(f.schema_path) +
                        " --subject 'sh -c \"while read l; do echo banana; done\"' --chars race");
        REQUIRE(r.exit_code == 2);
    }
}

TEST_CASE("cli: help prints the documented defaults") {
    CliFixture f;
    const auto r = run_command(f.cli + " group --help");
    REQUIRE(r.exit_code == 0);
    REQUIRE_THAT(r.out, Catch::Matchers::ContainsSubstring("0.99"));
    REQUIRE_THAT(r.out, Catch::Matchers::ContainsSubstring("0.05"));
    const auto top = run_command(f.cli + " --help");
    REQUIRE(top.exit_code == 0);
    for (const char* sub : {"group", "causal", "search", "apparent", "fixture", "oracle"})
        REQUIRE_THAT(top.out, Catch::Matchers::ContainsSubstring(sub));
}

TEST_CASE("cli: apparent subcommand over a suite") {
    CliFixture f;
    const std::string suite_path = f.dir.file("suite.csv");
    write_file(suite_path,
               "race,age,c2\n"
               "green,lt40,no\n"
               "green,geq40,yes\n"
               "purple,lt40,yes\n"
               "purple,geq40,no\n");
    const auto r = run_command(f.cli + " apparent --schema " + shell_quote(f.schema_path) +
                               " --fixture echo-char:0 --chars race --kind group --suite " +
                               shell_quote(suite_path));
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    REQUIRE(doc["mode"] == "apparent-group");
    REQUIRE(doc["score"] == 1.0);
    REQUIRE(!doc.contains("confidence"));

    SECTION("apparent group over a profile is a usage error") {
        const std::string profile_path = f.dir.file("profile.json");
        write_file(profile_path, R"({"weights":{}})");
        const auto bad = run_command(f.cli + " apparent --schema " + shell_quote(f.schema_path) +
                                     " --fixture echo-char:0 --chars race --kind group "
                                     "--profile " +
                                     shell_quote(profile_path));
        REQUIRE(bad.exit_code == 1);
    }
    SECTION("apparent causal over a profile works") {
        const std::string profile_path = f.dir.file("profile.json");
        write_file(profile_path, R"({"weights":{"race":{"green":0.5,"purple":0.5}}})");
        const auto ok = run_command(f.cli + " apparent --schema " + shell_quote(f.schema_path) +
                                    " --fixture echo-char:0 --chars race --kind causal "
                                    "--profile " +
                                    shell_quote(profile_path));
        CAPTURE(ok.err);
        REQUIRE(ok.exit_code == 0);
        const auto doc2 = nlohmann::json::parse(ok.out);
        REQUIRE(doc2["mode"] == "apparent-causal");
        REQUIRE(doc2["score"] == 1.0);
    }
}

TEST_CASE("cli: pruned search and unpruned oracle search agree") {
    CliFixture f;
    const auto pruned =
        run_command(f.cli + " search --schema " + shell_quote(f.schema_path) +
                    " --fixture echo-char:0 --kind causal --threshold 0.5 --seed 3");
    const auto unpruned = run_command(f.cli + " oracle --schema " + shell_quote(f.schema_path) +
                                      " --fixture echo-char:0 --kind causal --threshold 0.5");
    REQUIRE(pruned.exit_code == 0);
    REQUIRE(unpruned.exit_code == 0);
    const auto a = nlohmann::json::parse(pruned.out);
    const auto b = nlohmann::json::parse(unpruned.out);
    REQUIRE(a["minimal_sets"] == b["minimal_sets"]);
    REQUIRE(a["stats"]["subsets_evaluated"].get<int>() <
            b["stats"]["subsets_evaluated"].get<int>());
}

TEST_CASE("cli: reports are byte-identical across identical runs") {
    CliFixture f;
    const std::string r1 = f.dir.file("r1.json");
    const std::string r2 = f.dir.file("r2.json");
    const std::string invocation = f.cli + " causal --schema " + shell_quote(f.schema_path) +
                                   " --fixture table:99 --chars race,age --seed 5 --report ";
    REQUIRE(run_command(invocation + shell_quote(r1)).exit_code == 0);
    REQUIRE(run_command(invocation + shell_quote(r2)).exit_code == 0);
    const auto bytes1 = testutil::read_file(r1);
    REQUIRE(!bytes1.empty());
    REQUIRE(bytes1 == testutil::read_file(r2));
}

TEST_CASE("cli: verify-determinism passes clean subjects and trips dirty ones") {
    CliFixture f;
    // causal runs revisit inputs as perturbations, so cache hits exist
    const auto ok = run_command(f.cli + " causal --schema " + shell_quote(f.schema_path) +
                                " --fixture xor:0:1 --chars race --verify-determinism "
                                "--verify-fraction 1.0");
    CAPTURE(ok.err);
    REQUIRE(ok.exit_code == 0);
    // a subject whose answer alternates on every call: the first re-check trips
    const auto bad = run_command(
        f.cli + " causal --schema " + shell_quote(f.schema_path) +
        " --subject 'sh -c \"i=0; while read l; do i=$((i+1)); echo $((i % 2)); done\"'"
        " --chars race --verify-determinism --verify-fraction 1.0 --seed 1");
    REQUIRE(bad.exit_code == 2);
    REQUIRE_THAT(bad.err, Catch::Matchers::ContainsSubstring("deterministic"));
}
