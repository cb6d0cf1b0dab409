#pragma once

#include <iosfwd>

namespace gpc {

/// Exit codes: 0 success, 1 tolerance or solver failure, 2 usage or configuration error.
enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gpc
