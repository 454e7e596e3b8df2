#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rpt/bounds.hpp"
#include "rpt/trainer.hpp"

#include <json.hpp>

namespace rpt::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalOptions {
  std::string checkpoint;
  int episodes = 50;
  double obs_level = 1.0;
  double p_clean = 0.0;
};

struct DemoOptions {
  std::vector<double> levels = {0.0, 0.25, 0.5, 1.0};
  int image_side = 32;
};

// Fully resolved run configuration: the union of training, evaluation,
// bound-verification, and demo settings, parsed from a JSON file with flat
// dotted keys. Unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  TrainConfig train;
  EvalOptions eval;
  DemoOptions demo;
  std::vector<BoundScenario> bound_scenarios;  // empty: shipped suite
  nlohmann::json raw_scenarios;                // echoed verbatim when given
  int bound_rollouts_override = 0;             // 0: per-scenario values
  int bound_threads = 1;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

// The resolved configuration as flat dotted keys; reparsing it reproduces
// the same RunConfig.
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace rpt::cli
