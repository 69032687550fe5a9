#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geomae {

// Runs one command line (args[0] is the program name). Returns the process
// exit code; failures print a single "geomae: error[<kind>]: <message>" line
// to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitInternal = 5;

// Flat "key = value" config merged into a command line: every key becomes
// --key=value unless the flag already appears in `args`. '#' starts a comment.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& config_text);

}  // namespace geomae
