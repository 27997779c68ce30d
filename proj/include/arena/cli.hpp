#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arena {

// Exit codes of `arena play`.
inline constexpr int kExitFinished = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCrashed = 2;
inline constexpr int kExitTimedOut = 3;

// Entry point of the `arena` binary; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arena
