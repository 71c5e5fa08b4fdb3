#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ipp::cli {

/// Exit codes: 0 ok, 2 config error, 3 data error, 4 internal error.
enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kInternalError = 4 };

/// Runs one command line (args exclude the program name). Errors are
/// reported as a single line on `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ipp::cli
