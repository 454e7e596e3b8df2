#include "rpt/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace rpt {

CurriculumState CurriculumState::initial(const CurriculumConfig& config) {
  CurriculumState s;
  s.config = config;
  s.eps_obs = config.obs_min;
  s.eps_act = config.act_min;
  s.p_ma = 0.0;
  return s;
}

CurriculumState curriculum_update(CurriculumState state, double success_rate) {
  if (!(success_rate >= 0.0 && success_rate <= 1.0))
    throw std::invalid_argument("curriculum: success rate outside [0, 1]");
  const CurriculumConfig& c = state.config;
  state.p_ma = c.gamma * success_rate + (1.0 - c.gamma) * state.p_ma;
  if (state.p_ma > c.tau_high) {
    state.eps_obs = std::min(state.eps_obs + c.delta_obs, c.obs_max);
    state.eps_act = std::min(state.eps_act + c.delta_act, c.act_max);
  } else if (state.p_ma < c.tau_low) {
    state.eps_obs = std::max(state.eps_obs - c.delta_obs, c.obs_min);
    state.eps_act = std::max(state.eps_act - c.delta_act, c.act_min);
  }
  return state;
}

std::unique_ptr<Env> make_env(const EnvChoice& choice) {
  if (choice.kind == EnvChoice::Kind::kLinear)
    return std::make_unique<LinearLipschitzEnv>(choice.linear);
  return std::make_unique<PointGoalImageEnv>(choice.image);
}

std::string format_g9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "iter,env_steps,mean_return,success_rate,p_ma,eps_obs,eps_act,"
         "loss_ppo,loss_jac,loss_smooth,grad_norm,wall_s\n";
  for (const MetricsRow& r : rows) {
    out << r.iter << ',' << r.env_steps << ',' << format_g9(r.mean_return)
        << ',' << format_g9(r.success_rate) << ',' << format_g9(r.p_ma) << ','
        << format_g9(r.eps_obs) << ',' << format_g9(r.eps_act) << ','
        << format_g9(r.loss_ppo) << ',' << format_g9(r.loss_jac) << ','
        << format_g9(r.loss_smooth) << ',' << format_g9(r.grad_norm) << ','
        << format_g9(r.wall_s) << '\n';
  }
  return out.str();
}

EvalResult evaluate(const PolicyParams& params, Env& env, int n_episodes,
                    const PerturbationSpec& spec, const num::RngStream& rng) {
  if (n_episodes < 1)
    throw std::domain_error("evaluate: n_episodes must be >= 1");
  spec.validate();
  const std::uint64_t context_seed = rng.child("eval_contexts").key();
  int successes = 0;
  double return_sum = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    num::RngStream stream = rng.child("episode").child(e);
    Vector obs = env.reset(ContextSeed{context_seed, static_cast<std::uint64_t>(e)});
    bool success = false;
    double ret = 0.0;
    while (!env.episode_done()) {
      const Vector delivered =
          perturb_flat_observation(obs, env.image_side(), spec, stream);
      const Vector a = mean_action(params, delivered);
      const Vector executed = perturb_action(a, spec.action_sigma, stream);
      StepResult r = env.step(executed);
      ret += r.reward.total;
      success = success || r.success;
      obs = r.observation;
    }
    successes += success ? 1 : 0;
    return_sum += ret;
  }
  return EvalResult{static_cast<double>(successes) / n_episodes,
                    return_sum / n_episodes};
}

namespace {

void apply_sgd(PolicyParams& params, const PolicyGrads& grads, double lr) {
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    params.weights[l] -= lr * grads.weights[l];
    params.biases[l] -= lr * grads.biases[l];
  }
  params.log_std -= lr * grads.log_std;
}

bool grads_finite(const PolicyGrads& g) {
  for (const Matrix& w : g.weights)
    if (!w.allFinite()) return false;
  for (const Vector& b : g.biases)
    if (!b.allFinite()) return false;
  return g.log_std.allFinite();
}

void dump_diagnostics(const std::string& out_dir, int iter, int update,
                      const PolicyParams& params, const LossBreakdown& lb) {
  if (out_dir.empty()) return;
  std::ostringstream s;
  s << "non-finite loss at iter " << iter << " update " << update << "\n"
    << "ppo=" << lb.ppo << " jac=" << lb.jac << " smooth=" << lb.smooth
    << " total=" << lb.total << " grad_norm=" << lb.grad_norm << "\n";
  for (std::size_t l = 0; l < params.weights.size(); ++l)
    s << "w" << l << " norm=" << params.weights[l].norm() << " b" << l
      << " norm=" << params.biases[l].norm() << "\n";
  s << "log_std=" << params.log_std.transpose() << "\n";
  atomic_write_file(out_dir + "/abort_diagnostics.txt", s.str());
  save_checkpoint(params, out_dir + "/checkpoint_abort.rptckpt");
}

}  // namespace

TrainResult train(const TrainConfig& config, const IterationObserver& observer) {
  if (config.outer_steps < 1 || config.inner_updates < 1 ||
      config.rollouts_per_context < 1 || config.contexts_per_iter < 1)
    throw std::invalid_argument("train: M, N, K, contexts must be >= 1");
  config.loss.validate();
  config.perturb.validate();

  std::unique_ptr<Env> env = make_env(config.env);
  if (!config.out_dir.empty())
    std::filesystem::create_directories(config.out_dir);

  const num::RngStream root(config.seed, {"train"});
  num::RngStream init_rng = root.child("init");
  PolicyParams params = PolicyParams::init_mlp(
      env->obs_dim(), config.hidden, env->action_dim(), config.init_log_std,
      init_rng);
  PolicyParams reference = params;
  if (!config.out_dir.empty())
    save_checkpoint(params, config.out_dir + "/checkpoint_init.rptckpt");

  CurriculumState curriculum = CurriculumState::initial(config.curriculum);
  std::vector<MetricsRow> metrics;
  long long env_steps = 0;
  double last_success_rate = 0.0;

  for (int m = 1; m <= config.outer_steps; ++m) {
    const PolicyParams sampling = params;

    PerturbationSpec spec = config.perturb;
    if (config.curriculum.enabled) {
      spec.obs_level = curriculum.eps_obs;
      spec.action_sigma = curriculum.eps_act;
    }

    // Rollout fan-out across contexts; slot-indexed results keep parallel
    // and serial execution identical.
    const num::RngStream collect_rng = root.child("collect").child(m);
    std::vector<RolloutGroup> groups(config.contexts_per_iter);
    auto collect_one = [&](int j) {
      std::unique_ptr<Env> local = make_env(config.env);
      const std::uint64_t ctx_id =
          static_cast<std::uint64_t>(m - 1) * config.contexts_per_iter + j;
      groups[j] = collect_group(*local, sampling,
                                ContextSeed{config.seed, ctx_id},
                                config.rollouts_per_context, spec, collect_rng);
    };
    if (config.threads > 1) {
      std::vector<std::future<void>> futs;
      futs.reserve(config.contexts_per_iter);
      for (int j = 0; j < config.contexts_per_iter; ++j)
        futs.push_back(std::async(std::launch::async, collect_one, j));
      for (auto& f : futs) f.get();
    } else {
      for (int j = 0; j < config.contexts_per_iter; ++j) collect_one(j);
    }

    double return_sum = 0.0;
    long long traj_count = 0;
    for (const RolloutGroup& g : groups)
      for (const Trajectory& t : g.trajectories) {
        return_sum += t.episode_return;
        env_steps += static_cast<long long>(t.steps.size());
        ++traj_count;
      }

    num::RngStream shuffle_rng = root.child("shuffle").child(m);
    const auto batches = make_minibatches(groups, config.batch_size,
                                          shuffle_rng, config.ratio_level);

    if (observer)
      observer(IterationInfo{m, sampling, reference, params});

    double ppo_sum = 0.0, jac_sum = 0.0, smooth_sum = 0.0, gnorm_sum = 0.0;
    for (int n = 0; n < config.inner_updates; ++n) {
      const auto& batch = batches[n % batches.size()];
      LossBreakdown lb =
          robust_loss(params, reference, batch, config.loss,
                      root.child("probes").child(m).child(n));
      if (!std::isfinite(lb.total) || !grads_finite(lb.grads)) {
        if (!config.out_dir.empty()) {
          atomic_write_file(config.out_dir + "/metrics.csv",
                            metrics_csv(metrics));
        }
        dump_diagnostics(config.out_dir, m, n, params, lb);
        throw NumericalAbort("non-finite loss at iteration " +
                             std::to_string(m));
      }
      ppo_sum += lb.ppo;
      jac_sum += lb.jac;
      smooth_sum += lb.smooth;
      gnorm_sum += lb.grad_norm;
      PolicyGrads grads = std::move(lb.grads);
      if (lb.grad_norm > config.grad_clip && lb.grad_norm > 0.0)
        grads.scale_in_place(config.grad_clip / lb.grad_norm);
      apply_sgd(params, grads, config.learning_rate);
    }
    reference = params;

    if (config.curriculum.eval_interval > 0 &&
        m % config.curriculum.eval_interval == 0) {
      const EvalResult ev = evaluate(params, *env, config.eval_episodes, spec,
                                     root.child("eval").child(m));
      last_success_rate = ev.success_rate;
      if (config.curriculum.enabled)
        curriculum = curriculum_update(curriculum, ev.success_rate);
    }

    MetricsRow row;
    row.iter = m;
    row.env_steps = env_steps;
    row.mean_return = return_sum / static_cast<double>(traj_count);
    row.success_rate = last_success_rate;
    row.p_ma = curriculum.p_ma;
    row.eps_obs = spec.obs_level;
    row.eps_act = spec.action_sigma;
    row.loss_ppo = ppo_sum / config.inner_updates;
    row.loss_jac = jac_sum / config.inner_updates;
    row.loss_smooth = smooth_sum / config.inner_updates;
    row.grad_norm = gnorm_sum / config.inner_updates;
    row.wall_s = 0.0;  // kept deterministic so reruns are byte-identical
    metrics.push_back(row);
  }

  if (!config.out_dir.empty()) {
    atomic_write_file(config.out_dir + "/metrics.csv", metrics_csv(metrics));
    save_checkpoint(params, config.out_dir + "/checkpoint_final.rptckpt");
  }
  return TrainResult{std::move(params), std::move(metrics), curriculum};
}

}  // namespace rpt
