#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace attrition::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses `args` (without the program name), runs one subcommand and returns its exit code.
/// Results go to `--out` or `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace attrition::cli
