#pragma once

// Command-line front-end: props, selftest, simulate, qkd.
//
// Exit codes: 0 pass, 1 check failure, 2 usage or configuration error.

#include <iosfwd>
#include <string>
#include <vector>

namespace conjsim::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Toolkit version embedded in every report.
std::string version();

/// Runs one command; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace conjsim::cli
