#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aurlab::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 usage error, 2 data error, 3 audit failure
// (a derived-formula row losing its Monte Carlo gate).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitAuditFailure = 3;

// Full command dispatch, separated from main() so tests can drive it.
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aurlab::cli
