#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rpt/envs.hpp"
#include "rpt/policy.hpp"

namespace rpt {

struct TrajectoryStep {
  Vector state;            // true state after the transition
  Vector delivered_obs;    // perturbed observation the policy acted on
  Vector action;           // action sampled from the policy
  Vector executed_action;  // action after execution noise
  double log_prob = 0.0;   // sampling-policy log-density of `action`
  RewardTerms reward;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double episode_return = 0.0;  // sum of per-step reward totals
  bool success = false;
  std::uint64_t context_id = 0;
  int rollout_id = 0;
};

// K trajectories sharing one context, with leave-one-out advantages that
// sum to zero per group.
struct RolloutGroup {
  std::uint64_t context_id = 0;
  std::vector<Trajectory> trajectories;
  std::vector<double> advantages;
};

// A_k = r_k - mean of the other K-1 returns. Requires K >= 2.
std::vector<double> loo_advantages(const std::vector<double>& returns);

// Runs K episodes from the same context under the frozen sampling policy:
// perturb observation -> sample action -> record log-prob -> perturb action
// -> env step. Rollout k draws from rng.child(context.id).child(k), so
// groups are reproducible serially or in parallel.
RolloutGroup collect_group(Env& env, const PolicyParams& sampling,
                           const ContextSeed& context, int k,
                           const PerturbationSpec& spec,
                           const num::RngStream& rng);

// Observation perturbation on a flattened env observation; image channels
// reshape through the env's G x G layout.
Vector perturb_flat_observation(const Vector& obs, int image_side,
                                const PerturbationSpec& spec,
                                num::RngStream& rng);

enum class RatioLevel { kStep, kRollout };

// One PPO update sample: a single step at step-level ratios, or a whole
// trajectory at rollout-level ratios (log-probs summed).
struct MinibatchItem {
  std::vector<std::pair<Vector, Vector>> steps;  // (delivered obs, action)
  double logp_old = 0.0;
  double advantage = 0.0;
};

// Flattens groups into update samples, shuffles deterministically from the
// stream, and partitions into batches (last one smaller). Every sample
// appears exactly once per epoch.
std::vector<std::vector<MinibatchItem>> make_minibatches(
    const std::vector<RolloutGroup>& groups, int batch_size,
    num::RngStream& rng, RatioLevel level = RatioLevel::kStep);

}  // namespace rpt
