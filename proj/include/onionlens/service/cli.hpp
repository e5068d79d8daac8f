#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace onionlens::service {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure, e.g. every seed failed
inline constexpr int kExitUsage = 2;    // bad flags, config or artifacts

/// Entry point of the onionlens command. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onionlens::service
