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

#include <sys/wait.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fairprobe/fairprobe.hpp"

namespace testutil {

using namespace fairprobe;

inline Schema make_schema(std::vector<std::pair<std::string, std::vector<std::string>>> spec) {
    std::vector<Characteristic> chars;
    for (auto& [name, labels] : spec) chars.push_back({std::move(name), std::move(labels)});
    return Schema(std::move(chars));
}

/// n binary characteristics named c0..c{n-1} with labels no/yes.
inline Schema binary_schema(std::size_t n) {
    std::vector<Characteristic> chars;
    for (std::size_t i = 0; i < n; ++i)
        chars.push_back({"c" + std::to_string(i), {"no", "yes"}});
    return Schema(std::move(chars));
}

/// Generic labels: v0..v{m-1} per characteristic, given label counts.
inline Schema labeled_schema(const std::vector<std::uint32_t>& label_counts) {
    std::vector<Characteristic> chars;
    for (std::size_t i = 0; i < label_counts.size(); ++i) {
        std::vector<std::string> labels;
        for (std::uint32_t l = 0; l < label_counts[i]; ++l)
            labels.push_back("v" + std::to_string(l));
        chars.push_back({"c" + std::to_string(i), std::move(labels)});
    }
    return Schema(std::move(chars));
}

/// Seeded random schema with n in [3,5] and 2..3 labels per characteristic.
inline Schema random_small_schema(std::uint64_t seed) {
    RngStream rng(seed);
    const std::size_t n = 3 + rng.bounded(3);
    std::vector<std::uint32_t> counts;
    for (std::size_t i = 0; i < n; ++i)
        counts.push_back(2 + static_cast<std::uint32_t>(rng.bounded(2)));
    return labeled_schema(counts);
}

/// In-process subject that counts its invocations.
struct CountingSubject {
    std::shared_ptr<std::atomic<std::uint64_t>> calls =
        std::make_shared<std::atomic<std::uint64_t>>(0);
    Subject subject;

    explicit CountingSubject(std::function<Decision(const Input&, const Schema&)> fn,
                             std::string name = "counting")
        : subject(Subject::function(std::move(name),
                                    [counter = calls, fn = std::move(fn)](
                                        const Input& k, const Schema& s) {
                                        counter->fetch_add(1);
                                        return fn(k, s);
                                    })) {}

    std::uint64_t count() const { return calls->load(); }
};

inline Input make_input(std::vector<std::uint32_t> values) { return Input{std::move(values)}; }

// --- filesystem / process helpers -------------------------------------------

struct TempDir {
    std::string path;
    TempDir() {
        char tmpl[] = "/tmp/fairprobe_test_XXXXXX";
        path = ::mkdtemp(tmpl);
    }
    ~TempDir() { std::system(("rm -rf '" + path + "'").c_str()); }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs a shell command, capturing stdout/stderr and the exit code.
inline CommandResult run_command(const std::string& command) {
    TempDir dir;
    const std::string out_path = dir.file("out");
    const std::string err_path = dir.file("err");
    const int status =
        std::system((command + " >" + out_path + " 2>" + err_path).c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_path);
    r.err = read_file(err_path);
    return r;
}

/// Path of the CLI binary under test, provided by the build.
inline std::string cli_path() {
    const char* p = std::getenv("FAIRPROBE_CLI");
    return p ? p : "";
}

inline std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

} // namespace testutil
