#pragma once

#include <string>
#include <vector>

namespace ebwtpc::cli {

// Runs one subcommand (simulate | index | cluster | call | validate | stats |
// all). Returns the process exit status. `args` excludes the program name.
int dispatch(std::vector<std::string> args);
int dispatch(int argc, const char* const* argv);

}  // namespace ebwtpc::cli
