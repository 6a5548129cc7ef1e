#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ntnkb {

// Exit codes: 0 success, 1 data or numeric error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Runs `ntnkb <subcommand> [flags]`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ntnkb
