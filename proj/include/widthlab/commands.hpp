#pragma once

#include <ostream>

#include "widthlab/config.hpp"

namespace widthlab {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

// Runs one command, writing artifacts under config.out. Returns kExitFailure
// when a validation criterion fails; config problems throw ConfigInvalid.
int run_command(const RunConfig& config, std::ostream& log);

} // namespace widthlab
