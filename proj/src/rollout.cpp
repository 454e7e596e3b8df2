#include "rpt/rollout.hpp"

#include <numeric>
#include <stdexcept>

namespace rpt {

std::vector<double> loo_advantages(const std::vector<double>& returns) {
  const int k = static_cast<int>(returns.size());
  if (k < 2) throw std::domain_error("loo_advantages: need K >= 2 returns");
  const double total = std::accumulate(returns.begin(), returns.end(), 0.0);
  std::vector<double> adv(k);
  for (int i = 0; i < k; ++i)
    adv[i] = returns[i] - (total - returns[i]) / (k - 1);
  return adv;
}

Vector perturb_flat_observation(const Vector& obs, int image_side,
                                const PerturbationSpec& spec,
                                num::RngStream& rng) {
  if (spec.channel == ObsChannel::kNone ||
      spec.channel == ObsChannel::kVectorBall)
    return Vector(perturb_observation(Matrix(obs), spec, rng).col(0));
  if (image_side < 2)
    throw std::invalid_argument(
        "perturb: image channel on a non-image observation");
  return flatten_image(
      perturb_observation(unflatten_image(obs, image_side), spec, rng));
}

RolloutGroup collect_group(Env& env, const PolicyParams& sampling,
                           const ContextSeed& context, int k,
                           const PerturbationSpec& spec,
                           const num::RngStream& rng) {
  if (k < 2) throw std::domain_error("collect_group: need K >= 2 rollouts");
  spec.validate();

  RolloutGroup group;
  group.context_id = context.id;
  group.trajectories.reserve(k);
  std::vector<double> returns(k);

  for (int i = 0; i < k; ++i) {
    num::RngStream stream = rng.child(context.id).child(static_cast<std::uint64_t>(i));
    Trajectory traj;
    traj.context_id = context.id;
    traj.rollout_id = i;

    Vector obs = env.reset(context);
    while (!env.episode_done()) {
      TrajectoryStep step;
      step.delivered_obs =
          perturb_flat_observation(obs, env.image_side(), spec, stream);
      step.action = sample_action(sampling, step.delivered_obs, stream);
      step.log_prob = log_prob(sampling, step.delivered_obs, step.action);
      step.executed_action =
          perturb_action(step.action, spec.action_sigma, stream);
      StepResult result = env.step(step.executed_action);
      step.state = result.state;
      step.reward = result.reward;
      traj.episode_return += result.reward.total;
      traj.success = traj.success || result.success;
      obs = result.observation;
      traj.steps.push_back(std::move(step));
    }
    returns[i] = traj.episode_return;
    group.trajectories.push_back(std::move(traj));
  }
  group.advantages = loo_advantages(returns);
  return group;
}

std::vector<std::vector<MinibatchItem>> make_minibatches(
    const std::vector<RolloutGroup>& groups, int batch_size,
    num::RngStream& rng, RatioLevel level) {
  if (batch_size < 1)
    throw std::domain_error("make_minibatches: batch_size must be >= 1");

  std::vector<MinibatchItem> items;
  for (const RolloutGroup& g : groups) {
    for (std::size_t t = 0; t < g.trajectories.size(); ++t) {
      const Trajectory& traj = g.trajectories[t];
      const double adv = g.advantages[t];
      if (level == RatioLevel::kStep) {
        for (const TrajectoryStep& s : traj.steps) {
          MinibatchItem item;
          item.steps.emplace_back(s.delivered_obs, s.action);
          item.logp_old = s.log_prob;
          item.advantage = adv;
          items.push_back(std::move(item));
        }
      } else {
        MinibatchItem item;
        for (const TrajectoryStep& s : traj.steps) {
          item.steps.emplace_back(s.delivered_obs, s.action);
          item.logp_old += s.log_prob;
        }
        item.advantage = adv;
        items.push_back(std::move(item));
      }
    }
  }
  if (items.empty())
    throw std::domain_error("make_minibatches: empty rollout buffer");

  // Fisher-Yates from the stream.
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, static_cast<int>(i));
    std::swap(items[i], items[j]);
  }

  std::vector<std::vector<MinibatchItem>> batches;
  for (std::size_t at = 0; at < items.size(); at += batch_size) {
    const std::size_t end = std::min(items.size(), at + batch_size);
    batches.emplace_back(items.begin() + at, items.begin() + end);
  }
  return batches;
}

}  // namespace rpt
