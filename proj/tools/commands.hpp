#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ck::cli {

// Exit codes: 0 success, 1 internal error, 2 validation failure, 64 usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ck::cli
