#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tradelab::cli {

// Parses and runs one command line. Returns the process exit code:
// 0 success, 1 user or configuration error, 2 internal error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tradelab::cli
