#pragma once

#include <iosfwd>

namespace mlif::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;
inline constexpr int kUsageError = 2;

// Runs one subcommand. Scalar results go to `out` as JSON; domain errors go
// to `err` as a JSON object with "error" and "message" fields.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mlif::cli
