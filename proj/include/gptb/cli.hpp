#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gptb::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,       // bad flags, missing file, malformed config
  kExitValidation = 2,  // inputs parsed but failed a mathematical check
  kExitSoundness = 3,   // sweep found a bound above its reference
};

/// Runs the `gptb` command line. `args` excludes the program name. Results go
/// to `out` (or the --out file), diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gptb::cli
