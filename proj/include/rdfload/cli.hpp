#pragma once

#include <iosfwd>

namespace rdfload {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitRuntime = 2,
  kExitRunAborted = 3,  // a bench run that crashed or fell below the speed threshold
};

/// Entry point of the `rdfload` command; subcommands prepare, stats, synth,
/// bench, analyze and report.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rdfload
