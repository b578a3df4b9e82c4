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

#include <thread>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace fairprobe;
using testutil::binary_schema;
using testutil::make_input;

TEST_CASE("default_distance is the discrete metric") {
    REQUIRE(default_distance(true, true) == 0.0);
    REQUIRE(default_distance(true, false) == 1.0);
    REQUIRE(default_distance(false, false) == 0.0);
    // symmetry and the identity axiom over the whole (tiny) domain
    for (bool a : {false, true})
        for (bool b : {false, true}) {
            REQUIRE(default_distance(a, b) == default_distance(b, a));
            if (a == b) REQUIRE(default_distance(a, b) == 0.0);
            REQUIRE(default_distance(a, b) >= 0.0);
            REQUIRE(default_distance(a, b) <= 1.0);
        }
}

TEST_CASE("fixture subjects evaluate in process") {
    const Schema schema = binary_schema(2);
    SECTION("const-true is true everywhere") {
        const Subject s = make_fixture_subject("const:true", schema);
        for (std::uint64_t r = 0; r < schema.domain_size(); ++r)
            REQUIRE(evaluate_raw(s, schema.input_at(r), schema) == true);
    }
    SECTION("echo-char:0 is true iff index 0 is non-zero") {
        const Subject s = make_fixture_subject("echo-char:0", schema);
        REQUIRE(evaluate_raw(s, make_input({1, 0}), schema) == true);
        REQUIRE(evaluate_raw(s, make_input({0, 1}), schema) == false);
    }
    SECTION("inputs are validated") {
        const Subject s = make_fixture_subject("const:true", schema);
        REQUIRE_THROWS_AS(evaluate_raw(s, make_input({0}), schema), InvalidArgument);
    }
}

TEST_CASE("external subjects speak the line protocol") {
    const Schema schema = binary_schema(2);

    SECTION("a well-behaved responder") {
        const Subject s = Subject::process("sh -c 'while read l; do echo true; done'");
        REQUIRE(evaluate_raw(s, make_input({0, 0}), schema) == true);
        REQUIRE(evaluate_raw(s, make_input({1, 1}), schema) == true);
    }
    SECTION("responses 1 and 0 are accepted") {
        const Subject s = Subject::process(
            "sh -c 'while read l; do case \"$l\" in yes,*) echo 1;; *) echo 0;; esac; done'");
        REQUIRE(evaluate_raw(s, make_input({1, 0}), schema) == true);
        REQUIRE(evaluate_raw(s, make_input({0, 1}), schema) == false);
    }
    SECTION("a malformed response is a protocol error") {
        const Subject s = Subject::process("sh -c 'while read l; do echo maybe; done'");
        REQUIRE_THROWS_MATCHES(
            evaluate_raw(s, make_input({0, 0}), schema), ProtocolError,
            Catch::Matchers::MessageMatches(
                Catch::Matchers::ContainsSubstring("malformed subject response 'maybe'")));
    }
    SECTION("a crashing subject reports its exit") {
        const Subject s = Subject::process("sh -c 'exit 3'");
        REQUIRE_THROWS_AS(evaluate_raw(s, make_input({0, 0}), schema), ProtocolError);
    }
    SECTION("a silent subject times out, carrying the request for replay") {
        ProcessOptions opts;
        opts.timeout_ms = 150;
        const Subject s = Subject::process({"sh", "-c", "sleep 5"}, opts);
        try {
            evaluate_raw(s, make_input({1, 0}), schema);
            FAIL("expected a timeout");
        } catch (const ProtocolError& e) {
            REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("timed out"));
            REQUIRE(e.request == "yes,no");
        }
    }
    SECTION("requests pair with responses in order, even under contention") {
        // the responder's answer depends on the request, so any reordering or
        // dropped line would surface as a wrong decision
        const Subject s = Subject::process(
            "sh -c 'while read l; do case \"$l\" in yes,*) echo true;; *) echo false;; esac; "
            "done'");
        std::atomic<int> failures{0};
        std::vector<std::thread> threads;
        for (int t = 0; t < 4; ++t)
            threads.emplace_back([&] {
                for (int i = 0; i < 50; ++i) {
                    const std::uint32_t bit = static_cast<std::uint32_t>(i & 1);
                    const bool got = evaluate_raw(s, make_input({bit, 0}), schema);
                    if (got != (bit == 1)) failures.fetch_add(1);
                }
            });
        for (auto& t : threads) t.join();
        REQUIRE(failures.load() == 0);
    }
}

TEST_CASE("worker clones") {
    const Schema schema = binary_schema(1);
    SECTION("non-reentrant subjects are shared") {
        const Subject s = Subject::process("sh -c 'while read l; do echo true; done'");
        const Subject clone = s.worker_clone();
        REQUIRE(evaluate_raw(clone, make_input({0}), schema) == true);
    }
    SECTION("reentrant subjects get their own process") {
        ProcessOptions opts;
        opts.declared_reentrant = true;
        const Subject s = Subject::process("sh -c 'while read l; do echo true; done'", opts);
        const Subject clone = s.worker_clone();
        REQUIRE(evaluate_raw(s, make_input({0}), schema) == true);
        REQUIRE(evaluate_raw(clone, make_input({0}), schema) == true);
    }
}

TEST_CASE("shell_split") {
    REQUIRE(shell_split("a b c") == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(shell_split("a 'b c' d") == std::vector<std::string>{"a", "b c", "d"});
    REQUIRE(shell_split("a \"b 'c'\"") == std::vector<std::string>{"a", "b 'c'"});
    REQUIRE(shell_split("a\\ b") == std::vector<std::string>{"a b"});
    REQUIRE_THROWS_AS(shell_split("'unterminated"), InvalidArgument);
    REQUIRE_THROWS_AS(shell_split("   "), InvalidArgument);
}

TEST_CASE("the bundled fixture executable speaks the protocol end to end") {
    const std::string cli = testutil::cli_path();
    REQUIRE(!cli.empty());
    testutil::TempDir dir;
    const Schema schema = binary_schema(2);
    const std::string schema_path = dir.file("schema.json");
    testutil::write_file(schema_path, serialize_schema(schema));

    const Subject s =
        Subject::process({cli, "fixture", "xor:0:1", "--schema", schema_path});
    REQUIRE(evaluate_raw(s, make_input({1, 0}), schema) == true);
    REQUIRE(evaluate_raw(s, make_input({1, 1}), schema) == false);
    REQUIRE(evaluate_raw(s, make_input({0, 0}), schema) == false);
}
