#pragma once

#include <ostream>

namespace spinent::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kInvariant = 3,
};

/// Entry point of the `spinent` tool. Normal output goes to `out`, diagnostics
/// to `err`; the return value is one of ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace spinent::cli
