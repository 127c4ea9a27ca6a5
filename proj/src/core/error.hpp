// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace roadrisk {

// Broad failure classes. They map one-to-one onto C API status codes and
// CLI exit codes.
enum class ErrorKind {
    Config,
    Data,
    Numeric,
    Io,
    MissingArtifact,
    InvalidArgument,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Short machine-readable tag such as "ShapeMismatch" or "MissingColumn".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string code, const std::string& message) {
    throw Error(kind, std::move(code), message);
}

void log_warning(const std::string& message);
void log_info(const std::string& message);

} // namespace roadrisk
