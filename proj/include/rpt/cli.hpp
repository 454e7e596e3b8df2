#pragma once

#include <string>
#include <vector>

#include "rpt/config.hpp"

namespace rpt::cli {

// Subcommand dispatcher for train / eval / verify-bounds / perturb-demo.
// Exit codes: 0 success, 2 config error, 3 unsatisfied bound, 4 numerical
// abort, 1 unexpected failure. `args` excludes the program name.
int run(const std::vector<std::string>& args);

// Exposed for tests: the eval-subcommand scenario grid as CSV.
std::string eval_grid_csv(const RunConfig& config, const PolicyParams& params);

}  // namespace rpt::cli
