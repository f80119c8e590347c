#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace carnot {

// Exit codes: 0 every check passed, 1 some check failed, 2 bad config or I/O.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace carnot
