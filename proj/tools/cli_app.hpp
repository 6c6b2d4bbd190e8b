#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pc2depth::cli {

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code: 0 on success, 2 usage, 3 format/protocol,
/// 4 transport, 5 capability, 6 io/lookup.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pc2depth::cli
