#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace courtformer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs one command line (args[0] is the program name) and returns the exit
// code. CSV results go to `out` and to files under the output directory;
// progress, warnings and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace courtformer::cli
