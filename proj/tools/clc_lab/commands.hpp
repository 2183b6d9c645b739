#pragma once

#include <iosfwd>

namespace clc::lab {

inline constexpr int kExitOk = 0;
/// Bad flags, unreadable or invalid input files.
inline constexpr int kExitInput = 1;
/// An optimizer that did not converge or a failed verification check.
inline constexpr int kExitFailure = 2;

/// Parses and runs one clc-lab invocation. All output goes to the given
/// streams; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clc::lab
