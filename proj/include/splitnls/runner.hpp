#pragma once

#include <string>

#include "splitnls/config.hpp"

namespace splitnls {

// CLI-facing options; everything experiment-specific lives in the config file.
struct RunOptions {
    std::string config_path;
    std::string out_dir;  // empty: use the config's output.directory
    int jobs = 1;
    bool verbose = false;
    std::string expect_kind;  // subcommand name; empty skips the match check
};

// Loads the config, runs the experiment, writes report.json / rows.csv (and
// plot.svg for ladder kinds, trajectory.bin when requested) into the output
// directory. Returns the process exit code:
//   0 pass, 1 runtime failure or blowup, 2 quantitative check failed,
//   3 config parse error, 4 config schema error, 5 config invariant violated.
int run_experiment(const RunOptions& opts);

}  // namespace splitnls
