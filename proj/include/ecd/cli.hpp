#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecd::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kAnalysisFailure = 3,
  kDiverged = 4,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "ECD_OUT_DIR";

/// Entry point shared by the `ecd` binary and the tests. `args` excludes the
/// program name. Subcommands: run, compare, sweep, basins, volume.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecd::cli
