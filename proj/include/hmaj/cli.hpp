#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hmaj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime error or failed verification
inline constexpr int kExitConfig = 2;   // bad arguments, config or missing inputs

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hmaj::cli
