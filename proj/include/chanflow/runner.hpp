#pragma once

#include "chanflow/scenario.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace chanflow {

/// Exit status of a command: 0 when every verdict passes, 2 on any failing
/// verdict, 1 on errors.
enum ExitCode : int { kExitPass = 0, kExitError = 1, kExitFail = 2 };

std::vector<std::string> command_names();

struct RunOptions {
    std::string out_dir;  ///< overrides the scenario's output directory when set
    int threads = 1;
    bool quiet = false;
};

/// Runs one subcommand on a parsed scenario. Artifacts go to <out>/<command>/
/// (CSV, SVG, optional field file, verdicts.csv, manifest.json). Errors from
/// the modules are caught, printed with context to `err` and mapped to exit 1.
int run_command(const std::string& command, const Scenario& scenario, const RunOptions& options,
                std::ostream& out, std::ostream& err);

}  // namespace chanflow
