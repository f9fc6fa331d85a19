// Copyright 2026 The collapse-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace collapse {

// All library failures derive from Error so the C boundary can map them to
// status codes with a single catch ladder.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operator dimension exceeds the configured cap.
class SizeError : public Error {
public:
    using Error::Error;
};

// Operands with incompatible shapes or an invalid domain object.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Scenario / config rejected by validation. `field` is a JSON-pointer-like
// path ("/scenario/zeta") or empty when the problem is not field-specific.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)), message_(message) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string field_;
    std::string message_;
};

// Non-finite values appeared during integration.
class BlowupError : public Error {
public:
    BlowupError(double time, const std::string& what)
        : Error(what + " at t=" + std::to_string(time)), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

// play_step called with fewer than two active players.
class GameOverError : public Error {
public:
    using Error::Error;
};

// Non-signaling comparison whose variants touch the local site.
class InvalidComparisonError : public Error {
public:
    using Error::Error;
};

}  // namespace collapse
