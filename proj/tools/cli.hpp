#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace xrf::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2, kCheckFailed = 3 };

/// Runs the `xrf` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Blocks SIGINT and SIGTERM in the calling thread so threads started later
/// inherit the mask and the signals can be collected with sigwait.
void block_shutdown_signals();

}  // namespace xrf::cli
