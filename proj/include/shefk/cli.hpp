#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shefk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Subcommand dispatcher. args excludes the program name. Results go to
/// `--out` when given, otherwise to `out`; messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

/// FNV-1a 64 of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace shefk::cli
