#pragma once

#include <iosfwd>

namespace fakejob {

// Exit codes of the command-line driver.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitModelStore = 3,
    kExitNumeric = 4,
};

/// Subcommands: eda | train | evaluate | predict | compare. Machine-readable
/// output goes to `out`, diagnostics and progress to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fakejob
