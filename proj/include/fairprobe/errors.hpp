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

#include <stdexcept>
#include <string>

namespace fairprobe {

/// Base class for all fairprobe errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad arguments or configuration (CLI exit code 1).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// Subject process or wire-protocol failure (CLI exit code 2). Carries the
/// serialized request line, when known, so the failing test can be replayed.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what, std::string request_line = "")
        : Error(request_line.empty() ? what : what + " [request: " + request_line + "]"),
          request(std::move(request_line)) {}
    std::string request;
};

/// A subject returned two different decisions for the same input (exit code 2).
class DeterminismError : public ProtocolError {
public:
    explicit DeterminismError(const std::string& what, std::string request_line = "")
        : ProtocolError(what, std::move(request_line)) {}
};

/// Malformed schema, test-suite, or profile document (CLI exit code 3).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

/// A configured size bound was exceeded (CLI exit code 4).
class BoundError : public Error {
public:
    explicit BoundError(const std::string& what) : Error(what) {}
};

} // namespace fairprobe
