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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fairprobe/errors.hpp"
#include "fairprobe/schema.hpp"

namespace fairprobe {

// A uniform handle over black-box decision software: either an external
// process speaking the line protocol, or an in-process function. Decisions
// are binary.
//
// Wire protocol (UTF-8 on the subject's stdin/stdout):
//   request  = label texts of the input joined by ',' in schema order + '\n'
//   response = one of `true`, `false`, `1`, `0` + '\n', flushed per line
// No handshake, no quoting; the subject must write nothing else to stdout.

using Decision = bool;

/// Discrete metric on the binary output domain: 0 iff the labels are equal.
inline double default_distance(Decision a, Decision b) { return a == b ? 0.0 : 1.0; }

/// Distance function over output labels, with values in [0, 1].
using OutputDistance = std::function<double(Decision, Decision)>;

namespace detail {

/// A persistent child process driven one request/response line at a time.
/// The j-th request always pairs with the j-th response: requests are written
/// and responses read under the caller's serialization.
class LineProcess {
public:
    LineProcess(const std::vector<std::string>& argv, int timeout_ms)
        : argv_(argv), timeout_ms_(timeout_ms) {
        spawn();
    }

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    ~LineProcess() { shutdown(); }

    std::string request(const std::string& line) {
        std::string framed = line;
        framed += '\n';
        const char* p = framed.data();
        std::size_t left = framed.size();
        while (left > 0) {
            ssize_t n = ::write(in_fd_, p, left);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(describe() + ": write to subject failed (" +
                                        std::string(std::strerror(errno)) + ")" + exit_note(),
                                    line);
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        return read_line(line);
    }

private:
    void spawn() {
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            throw ProtocolError("pipe() failed: " + std::string(std::strerror(errno)));
        pid_ = ::fork();
        if (pid_ < 0) throw ProtocolError("fork() failed: " + std::string(std::strerror(errno)));
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> cargv;
            cargv.reserve(argv_.size() + 1);
            for (auto& a : argv_) cargv.push_back(const_cast<char*>(a.c_str()));
            cargv.push_back(nullptr);
            ::execvp(cargv[0], cargv.data());
            // exec failed; the parent sees EOF on the next read
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        ::signal(SIGPIPE, SIG_IGN);
    }

    std::string read_line(const std::string& request_line) {
        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
        while (true) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline)
                throw ProtocolError(describe() + ": subject response timed out after " +
                                        std::to_string(timeout_ms_) + " ms",
                                    request_line);
            const auto left =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
            struct pollfd pfd {
                out_fd_, POLLIN, 0
            };
            int rc = ::poll(&pfd, 1, static_cast<int>(left));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(describe() + ": poll failed", request_line);
            }
            if (rc == 0) continue; // re-check deadline
            char chunk[4096];
            ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(describe() + ": read from subject failed", request_line);
            }
            if (n == 0)
                throw ProtocolError(describe() + ": subject closed its output" + exit_note(),
                                    request_line);
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    std::string exit_note() {
        int status = 0;
        pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            reaped_ = true;
            if (WIFEXITED(status))
                return " (exited with status " + std::to_string(WEXITSTATUS(status)) + ")";
            if (WIFSIGNALED(status))
                return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
        }
        return "";
    }

    void shutdown() {
        if (in_fd_ >= 0) ::close(in_fd_);
        if (out_fd_ >= 0) ::close(out_fd_);
        if (pid_ > 0 && !reaped_) {
            // give the child a moment to exit on EOF, then force it
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(2));
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
        }
    }

    std::string describe() const { return "subject '" + argv_.front() + "'"; }

    std::vector<std::string> argv_;
    int timeout_ms_;
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buffer_;
    bool reaped_ = false;
};

} // namespace detail

struct ProcessOptions {
    int timeout_ms = 10'000;
    bool declared_reentrant = false;
};

/// Splits a command line into argv the way a shell would: whitespace
/// separates words; single and double quotes group; backslash escapes the
/// next character outside single quotes.
inline std::vector<std::string> shell_split(const std::string& command) {
    std::vector<std::string> out;
    std::string cur;
    bool in_word = false;
    char quote = 0;
    for (std::size_t i = 0; i < command.size(); ++i) {
        char c = command[i];
        if (quote == '\'') {
            if (c == '\'')
                quote = 0;
            else
                cur += c;
        } else if (quote == '"') {
            if (c == '"')
                quote = 0;
            else if (c == '\\' && i + 1 < command.size() &&
                     (command[i + 1] == '"' || command[i + 1] == '\\'))
                cur += command[++i];
            else
                cur += c;
        } else if (c == '\'' || c == '"') {
            quote = c;
            in_word = true;
        } else if (c == '\\' && i + 1 < command.size()) {
            cur += command[++i];
            in_word = true;
        } else if (c == ' ' || c == '\t') {
            if (in_word) {
                out.push_back(cur);
                cur.clear();
                in_word = false;
            }
        } else {
            cur += c;
            in_word = true;
        }
    }
    if (quote != 0) throw InvalidArgument("unterminated quote in subject command");
    if (in_word) out.push_back(cur);
    if (out.empty()) throw InvalidArgument("empty subject command");
    return out;
}

/// Handle over decision software. Copies share the underlying subject;
/// `worker_clone` gives a worker its own process when the subject was
/// declared reentrant.
class Subject {
public:
    class Impl {
    public:
        virtual ~Impl() = default;
        virtual Decision evaluate(const Input& input, const Schema& schema) = 0;
        virtual std::shared_ptr<Impl> worker_clone() { return nullptr; }
        virtual const std::string& name() const = 0;
    };

    static Subject function(std::string name,
                            std::function<Decision(const Input&, const Schema&)> fn) {
        return Subject(std::make_shared<FunctionImpl>(std::move(name), std::move(fn)));
    }

    static Subject process(std::vector<std::string> argv, ProcessOptions opts = {}) {
        if (argv.empty()) throw InvalidArgument("empty subject command");
        return Subject(std::make_shared<ProcessImpl>(std::move(argv), opts));
    }

    static Subject process(const std::string& command, ProcessOptions opts = {}) {
        return process(shell_split(command), opts);
    }

    Decision evaluate(const Input& input, const Schema& schema) const {
        return impl_->evaluate(input, schema);
    }

    /// A handle for a parallel worker: a fresh process when reentrant,
    /// otherwise the same serialized subject.
    Subject worker_clone() const {
        auto clone = impl_->worker_clone();
        return clone ? Subject(std::move(clone)) : *this;
    }

    const std::string& name() const { return impl_->name(); }

private:
    explicit Subject(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    class FunctionImpl : public Impl {
    public:
        FunctionImpl(std::string name, std::function<Decision(const Input&, const Schema&)> fn)
            : name_(std::move(name)), fn_(std::move(fn)) {}
        Decision evaluate(const Input& input, const Schema& schema) override {
            return fn_(input, schema);
        }
        const std::string& name() const override { return name_; }

    private:
        std::string name_;
        std::function<Decision(const Input&, const Schema&)> fn_;
    };

    class ProcessImpl : public Impl {
    public:
        ProcessImpl(std::vector<std::string> argv, ProcessOptions opts)
            : argv_(std::move(argv)), opts_(opts), name_(argv_.front()) {}

        Decision evaluate(const Input& input, const Schema& schema) override {
            const std::string line = schema.wire_line(input);
            std::lock_guard<std::mutex> lock(mutex_);
            if (!process_) process_ = std::make_unique<detail::LineProcess>(argv_, opts_.timeout_ms);
            const std::string response = process_->request(line);
            if (response == "true" || response == "1") return true;
            if (response == "false" || response == "0") return false;
            throw ProtocolError("malformed subject response '" + response + "'", line);
        }

        std::shared_ptr<Impl> worker_clone() override {
            if (!opts_.declared_reentrant) return nullptr;
            return std::make_shared<ProcessImpl>(argv_, opts_);
        }

        const std::string& name() const override { return name_; }

    private:
        std::vector<std::string> argv_;
        ProcessOptions opts_;
        std::string name_;
        std::mutex mutex_;
        std::unique_ptr<detail::LineProcess> process_;
    };

    std::shared_ptr<Impl> impl_;
};

/// One request/response exchange with the subject for exactly this input.
inline Decision evaluate_raw(const Subject& subject, const Input& input, const Schema& schema) {
    schema.check_input(input);
    return subject.evaluate(input, schema);
}

} // namespace fairprobe
