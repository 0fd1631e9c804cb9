#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vcr::cli {

/// Exit codes: 0 success, 1 runtime failure (I/O, numerics, plugin), 2 usage error.
enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

/// args excludes the program name: {"despeckle", "--in", "y.vcr", ...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vcr::cli
