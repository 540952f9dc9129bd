#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fetv::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNotConverged = 2 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fetv::cli
