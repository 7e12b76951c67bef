// rumfit command line: ingest, fit, lower-bound, eval, crossval, wfhs-solve.

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rumfit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;

// Flat `key=value` file; blank lines and '#' comments ignored. Keys are long
// flag names without the dashes. Throws rumfit::InputError.
std::map<std::string, std::string> read_config_file(const std::string& path);

// `args` excludes the program name. Returns the process exit code.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rumfit::cli
