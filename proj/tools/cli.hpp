#pragma once

#include <iosfwd>

namespace fragkit::cli {

/// Runs one fragkit command. Returns the process exit code: 0 success,
/// 1 usage/parameter/input, 2 format, 3 compatibility, 4 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fragkit::cli
