#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vaecme::bench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Full command line (args[0] is the program name). Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace vaecme::bench
