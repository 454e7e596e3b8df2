#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rpt/envs.hpp"
#include "rpt/objective.hpp"
#include "rpt/policy.hpp"
#include "rpt/rollout.hpp"

namespace rpt {

// Raised when a training update produces non-finite values; the trainer
// dumps diagnostic state before throwing.
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CurriculumConfig {
  double gamma = 0.9;      // moving-average weight on the new success rate
  double tau_low = 0.6;
  double tau_high = 0.8;
  double delta_obs = 0.2;
  double delta_act = 0.02;
  double obs_min = 0.0;
  double obs_max = 1.0;
  double act_min = 0.0;
  double act_max = 0.3;
  int eval_interval = 1;   // I
  bool enabled = true;
};

// Adaptive noise levels plus the smoothed success rate driving them.
struct CurriculumState {
  double eps_obs = 0.0;
  double eps_act = 0.0;
  double p_ma = 0.0;
  CurriculumConfig config;

  static CurriculumState initial(const CurriculumConfig& config);
};

// p_MA <- gamma*p + (1-gamma)*p_MA; raise both channels above tau_high,
// lower both below tau_low, clamped to their configured ranges.
CurriculumState curriculum_update(CurriculumState state, double success_rate);

struct EnvChoice {
  enum class Kind { kLinear, kPointGoalImage };
  Kind kind = Kind::kLinear;
  LinearEnvConfig linear;
  PointGoalImageEnvConfig image;
};

std::unique_ptr<Env> make_env(const EnvChoice& choice);

struct TrainConfig {
  int outer_steps = 12;           // M
  int inner_updates = 10;         // N
  int rollouts_per_context = 8;   // K
  int contexts_per_iter = 16;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double grad_clip = 1.0;
  int eval_episodes = 32;
  int threads = 1;                // parallel rollout fan-out across contexts
  std::vector<int> hidden;        // mean-network hidden layer widths
  double init_log_std = -1.2039728043259361;  // log(0.3)
  RatioLevel ratio_level = RatioLevel::kStep;
  LossConfig loss;
  PerturbationSpec perturb;       // channel and p_clean; levels may come
                                  // from the curriculum
  CurriculumConfig curriculum;
  EnvChoice env;
  std::uint64_t seed = 1;
  std::string out_dir;            // empty: no files written
};

struct MetricsRow {
  int iter = 0;
  long long env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double p_ma = 0.0;
  double eps_obs = 0.0;
  double eps_act = 0.0;
  double loss_ppo = 0.0;
  double loss_jac = 0.0;
  double loss_smooth = 0.0;
  double grad_norm = 0.0;
  double wall_s = 0.0;
};

std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
};

// Runs episodes with mean actions (no policy sampling noise) under the
// given perturbation spec.
EvalResult evaluate(const PolicyParams& params, Env& env, int n_episodes,
                    const PerturbationSpec& spec, const num::RngStream& rng);

// Per-iteration observability hook for tests.
struct IterationInfo {
  int iter = 0;
  const PolicyParams& sampling;
  const PolicyParams& reference;
  const PolicyParams& current;
};
using IterationObserver = std::function<void(const IterationInfo&)>;

struct TrainResult {
  PolicyParams params;
  std::vector<MetricsRow> metrics;
  CurriculumState curriculum;
};

// Full outer loop: collect under current noise, N robust-loss updates with
// global gradient-norm clipping, reference snapshot, periodic evaluation,
// curriculum update. Writes metrics.csv and checkpoints when out_dir is set.
TrainResult train(const TrainConfig& config,
                  const IterationObserver& observer = {});

// Atomic file write (temp + rename) and the 9-significant-digit float
// format shared by all CSV outputs.
void atomic_write_file(const std::string& path, const std::string& content);
std::string format_g9(double value);

}  // namespace rpt
