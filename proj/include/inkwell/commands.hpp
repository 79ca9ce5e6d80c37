#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "inkwell/config.hpp"
#include "inkwell/refine.hpp"
#include "inkwell/unet.hpp"

namespace inkwell {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumerical = 3,
};

UNetConfig unet_config_from(const RunConfig& rc);
TrainConfig train_config_from(const RunConfig& rc);
EnhanceOptions enhance_options_from(const RunConfig& rc);

/// Runs `inkwell <args...>` (args excludes the program name), writing normal
/// output to `out` and diagnostics to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace inkwell
