#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unicorn::cli {

/// Exit codes of the command-line driver.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2 };

/// Parses `args` (program name first) and runs one subcommand. Progress and
/// errors go to `out` / `err`; data goes to files under --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unicorn::cli
