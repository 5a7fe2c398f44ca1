#pragma once

#include "slowlight/errors.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace slowlight::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_numerical = 3,
    exit_invariant = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

/// 64-bit FNV-1a of the raw config text, as printed in output headers.
std::uint64_t fnv1a(std::string_view text) noexcept;

/// Shortest round-trip decimal form, locale independent; "nan"/"inf" for non-finite.
std::string format_number(double x);

/// Entry point shared by the executable and the tests:
///   slowlight <subcommand> --config <path> [--out <dir>] [--strict]
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace slowlight::cli
