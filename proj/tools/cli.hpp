#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ncelab::cli {

inline constexpr const char* kVersion = "ncelab 1.0.0";

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kVerificationFailed = 1;
inline constexpr int kUsage = 2;
inline constexpr int kDiverged = 3;
}  // namespace exit_code

/// Runs one command line (args excludes the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ncelab::cli
