#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cardiacsr::cli {

// Runs one command line (without the program name). Returns the process exit code:
// 0 success, 2 configuration or schema error, 3 data error, 4 shape error.
int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

} // namespace cardiacsr::cli
