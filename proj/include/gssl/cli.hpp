#pragma once

#include <string>
#include <vector>

namespace gssl {

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success, 2 configuration/input error, 3 numeric or solver error.
int run_cli(const std::vector<std::string>& args);

} // namespace gssl
