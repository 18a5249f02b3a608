#pragma once

#include <string>
#include <vector>

namespace renal::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitData = 3,
    kExitIo = 4,
};

/// Runs one subcommand. `args` excludes the program name.
///
/// Subcommands: slice-extract, split, fit-shape-stats, postprocess, evaluate,
/// losses-check, phantom-gen. `--config file.json` supplies option values by
/// long name (without dashes); explicit flags take precedence.
int run(const std::vector<std::string>& args);

int run(int argc, const char* const* argv);

}  // namespace renal::cli
