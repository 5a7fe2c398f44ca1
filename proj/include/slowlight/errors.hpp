#pragma once

#include <stdexcept>
#include <string>

namespace slowlight {

enum class ErrorKind {
    invalid_argument,
    coupling_off,
    no_absorption_data,
    missing_parameter,
    oracle_scale_only,
    adiabatic_elimination_invalid,
    branch_tracking,
    wave_breaking,
    stability,
    invariant_violation,
    config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Library error. The kind selects the CLI exit code; the message carries detail.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace slowlight
