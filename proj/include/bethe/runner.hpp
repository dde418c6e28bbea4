#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "bethe/config.hpp"

namespace bethe {

inline constexpr const char* kVersionString = "bethe-transport 0.1.0";

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 check failure, 2 config error, 3 numeric abort
    std::vector<std::string> outputs;
};

// Executes one experiment end to end: validates the config, runs the mode's
// pipeline, writes CSV/JSON outputs plus a manifest into <out>/<mode>/.
// Throws ConfigError / NumericError for the CLI to map to exit codes.
RunResult run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace bethe
