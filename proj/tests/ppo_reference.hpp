#pragma once

// Independently coded plain leave-one-out PPO loop: no trainer, objective,
// or rollout modules. Shares only the deterministic primitives (envs,
// policy evaluation, RNG streams, tape) so that, with the regularizers off
// and no perturbations, the trainer must reproduce it number for number.

#include <numeric>
#include <vector>

#include "rpt/trainer.hpp"

namespace ppo_reference {

using namespace rpt;

struct RefRow {
  long long env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double loss_ppo = 0.0;
  double grad_norm = 0.0;
};

inline std::vector<RefRow> run(const TrainConfig& tc) {
  std::unique_ptr<Env> env = make_env(tc.env);
  const num::RngStream root(tc.seed, {"train"});
  num::RngStream init_rng = root.child("init");
  PolicyParams params = PolicyParams::init_mlp(
      env->obs_dim(), tc.hidden, env->action_dim(), tc.init_log_std, init_rng);

  struct Item {
    Vector obs;
    Vector act;
    double logp = 0.0;
    double adv = 0.0;
  };

  std::vector<RefRow> rows;
  long long env_steps = 0;
  double last_sr = 0.0;

  for (int m = 1; m <= tc.outer_steps; ++m) {
    const PolicyParams sampling = params;
    const num::RngStream collect = root.child("collect").child(m);

    std::vector<Item> items;
    double return_sum = 0.0;
    long long traj_count = 0;
    for (int j = 0; j < tc.contexts_per_iter; ++j) {
      const std::uint64_t ctx =
          static_cast<std::uint64_t>(m - 1) * tc.contexts_per_iter + j;
      const int k_rollouts = tc.rollouts_per_context;
      std::vector<double> returns(k_rollouts);
      std::vector<std::vector<Item>> per_traj(k_rollouts);
      for (int k = 0; k < k_rollouts; ++k) {
        num::RngStream stream =
            collect.child(ctx).child(static_cast<std::uint64_t>(k));
        Vector obs = env->reset(ContextSeed{tc.seed, ctx});
        double ret = 0.0;
        while (!env->episode_done()) {
          Item it;
          it.obs = obs;
          it.act = sample_action(sampling, obs, stream);
          it.logp = log_prob(sampling, obs, it.act);
          const StepResult r = env->step(it.act);
          ret += r.reward.total;
          obs = r.observation;
          per_traj[k].push_back(std::move(it));
          ++env_steps;
        }
        returns[k] = ret;
        return_sum += ret;
        ++traj_count;
      }
      const double total =
          std::accumulate(returns.begin(), returns.end(), 0.0);
      for (int k = 0; k < k_rollouts; ++k) {
        const double adv = returns[k] - (total - returns[k]) / (k_rollouts - 1);
        for (Item& it : per_traj[k]) {
          it.adv = adv;
          items.push_back(std::move(it));
        }
      }
    }

    num::RngStream shuffle = root.child("shuffle").child(m);
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      const int j = shuffle.uniform_int(0, static_cast<int>(i));
      std::swap(items[i], items[j]);
    }
    std::vector<std::vector<Item>> batches;
    for (std::size_t at = 0; at < items.size(); at += tc.batch_size) {
      const std::size_t end = std::min(items.size(), at + tc.batch_size);
      batches.emplace_back(items.begin() + at, items.begin() + end);
    }

    double ppo_sum = 0.0, gnorm_sum = 0.0;
    for (int n = 0; n < tc.inner_updates; ++n) {
      const auto& batch = batches[n % batches.size()];
      num::Tape tape;
      PolicyVars cur = PolicyVars::leaves(tape, params);
      auto item_expr = [&](const Item& it) {
        num::Var lp_new =
            cur.log_prob(tape.constant(it.obs), tape.constant(it.act));
        num::Var ratio = exp(lp_new - tape.constant(it.logp));
        num::Var clipped = clamp_min(
            clamp_max(ratio, 1.0 + tc.loss.clip_high), 1.0 - tc.loss.clip_low);
        return scale(
            min(scale(ratio, it.adv), scale(clipped, it.adv)), -1.0);
      };
      num::Var acc = item_expr(batch[0]);
      for (std::size_t i = 1; i < batch.size(); ++i)
        acc = acc + item_expr(batch[i]);
      num::Var loss = scale(acc, 1.0 / static_cast<double>(batch.size()));

      const auto leaves = cur.parameter_list();
      PolicyGrads grads =
          PolicyGrads::from_list(params, tape.gradients(loss, leaves));
      const double gnorm = grads.global_norm();
      ppo_sum += loss.scalar();
      gnorm_sum += gnorm;
      if (gnorm > tc.grad_clip && gnorm > 0.0)
        grads.scale_in_place(tc.grad_clip / gnorm);
      for (std::size_t l = 0; l < params.weights.size(); ++l) {
        params.weights[l] -= tc.learning_rate * grads.weights[l];
        params.biases[l] -= tc.learning_rate * grads.biases[l];
      }
      params.log_std -= tc.learning_rate * grads.log_std;
    }

    if (tc.curriculum.eval_interval > 0 &&
        m % tc.curriculum.eval_interval == 0) {
      const num::RngStream eval_rng = root.child("eval").child(m);
      const std::uint64_t ctx_seed = eval_rng.child("eval_contexts").key();
      int successes = 0;
      for (int e = 0; e < tc.eval_episodes; ++e) {
        Vector obs =
            env->reset(ContextSeed{ctx_seed, static_cast<std::uint64_t>(e)});
        bool success = false;
        while (!env->episode_done()) {
          const StepResult r = env->step(mean_action(params, obs));
          success = success || r.success;
          obs = r.observation;
        }
        successes += success ? 1 : 0;
      }
      last_sr = static_cast<double>(successes) / tc.eval_episodes;
    }

    RefRow row;
    row.env_steps = env_steps;
    row.mean_return = return_sum / static_cast<double>(traj_count);
    row.success_rate = last_sr;
    row.loss_ppo = ppo_sum / tc.inner_updates;
    row.grad_norm = gnorm_sum / tc.inner_updates;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ppo_reference
