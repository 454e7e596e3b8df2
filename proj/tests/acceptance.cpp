// Acceptance suite: one pass/fail line per criterion.
//
// Usage: acceptance [N ...]   (run only the listed criteria)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "rpt/bounds.hpp"
#include "rpt/cli.hpp"
#include "rpt/special.hpp"
#include "rpt/trainer.hpp"
#include "oracles.hpp"
#include "ppo_reference.hpp"

using namespace rpt;
using num::RngStream;
namespace fs = std::filesystem;

namespace {

struct Ctx {
  std::ostringstream log;
  bool ok = true;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      log << "    FAILED: " << what << "\n";
    }
  }
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::map<std::string, std::vector<BoundReport>> grouped_reports(
    const std::vector<BoundReport>& reports,
    const std::vector<BoundScenario>& suite) {
  std::map<std::string, std::vector<BoundReport>> by_name;
  std::size_t at = 0;
  for (const BoundScenario& sc : suite) {
    std::vector<int> hs = sc.horizons;
    if (hs.empty()) hs.push_back(sc.env.horizon);
    for (std::size_t i = 0; i < hs.size(); ++i)
      by_name[sc.name].push_back(reports.at(at++));
  }
  return by_name;
}

// ---------------------------------------------------------------------------
// 1. Bound certification across the scenario grid.
bool criterion1(Ctx& c) {
  const double t0 = now_seconds();
  const auto suite = default_bound_suite();
  const auto reports = verify(suite, RngStream(2025, {"acceptance_bounds"}), 2);
  const double elapsed = now_seconds() - t0;

  int theorem_scenarios = 0;
  for (const BoundScenario& sc : suite)
    if (sc.kind == TheoremKind::kT1 || sc.kind == TheoremKind::kT2 ||
        sc.kind == TheoremKind::kT3)
      ++theorem_scenarios;
  c.require(theorem_scenarios >= 6, "need >= 6 theorem scenarios");

  for (const BoundReport& r : reports) {
    c.require(r.rollouts >= 1000, "at least 1000 paired rollouts");
    std::ostringstream what;
    what << r.scenario << " H=" << r.params.horizon << ": gap "
         << r.gap_mean << " + 3*" << r.gap_se << " <= " << r.bound;
    c.require(r.satisfied, what.str());
    c.log << "    " << theorem_name(r.kind) << " " << r.scenario
          << " H=" << r.params.horizon << ": gap=" << format_g9(r.gap_mean)
          << " se=" << format_g9(r.gap_se) << " bound=" << format_g9(r.bound)
          << "\n";
  }
  c.require(elapsed < 120.0, "runtime under two minutes");
  c.log << "    runtime " << elapsed << " s\n";
  return c.ok;
}

// ---------------------------------------------------------------------------
// 2. Corollary 1: linear-in-H bound; ratio does not grow with H.
bool criterion2(Ctx& c) {
  const auto suite = default_bound_suite();
  const auto reports = verify(suite, RngStream(2025, {"acceptance_bounds"}), 2);
  const auto groups = grouped_reports(reports, suite);
  const auto& c1 = groups.at("c1_lf05");
  c.require(c1.size() == 3, "three corollary-1 horizons");

  std::vector<double> horizons, gaps, ses;
  for (const BoundReport& r : c1) {
    c.require(r.params.eps_offline == 0.0, "eps_offline = 0");
    c.require(std::abs(r.params.lipschitz_f - 0.5) < 1e-12, "L_f = 0.5");
    c.require(r.gap_mean <= r.bound, "gap within the explicit constant");
    horizons.push_back(r.params.horizon);
    gaps.push_back(r.gap_mean);
    ses.push_back(r.gap_se);
    c.log << "    H=" << r.params.horizon << " gap=" << format_g9(r.gap_mean)
          << " bound=" << format_g9(r.bound)
          << " ratio=" << format_g9(r.gap_mean / r.bound) << "\n";
  }
  // The bound grows at the fixed rate L_r*lambda*eps_s/(1-L_f) per step, so
  // gap/bound stays controlled iff the gap's marginal per-step slope does
  // not grow from one H segment to the next beyond MC noise. (The raw
  // ratio itself carries a deterministic O(1/H) warm-up from d_0 = 0.)
  for (std::size_t i = 2; i < gaps.size(); ++i) {
    const double span_prev = horizons[i - 1] - horizons[i - 2];
    const double span_next = horizons[i] - horizons[i - 1];
    const double slope_prev = (gaps[i - 1] - gaps[i - 2]) / span_prev;
    const double slope_next = (gaps[i] - gaps[i - 1]) / span_next;
    const double se_prev =
        std::sqrt(ses[i - 1] * ses[i - 1] + ses[i - 2] * ses[i - 2]) /
        span_prev;
    const double se_next =
        std::sqrt(ses[i] * ses[i] + ses[i - 1] * ses[i - 1]) / span_next;
    const double allowance =
        3.0 * std::sqrt(se_prev * se_prev + se_next * se_next);
    c.log << "    slope " << format_g9(slope_prev) << " -> "
          << format_g9(slope_next) << " (3*SE allowance "
          << format_g9(allowance) << ")\n";
    c.require(slope_next - slope_prev <= allowance,
              "per-step gap slope grows with H beyond MC noise");
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// 3. Corollary 2: discounted gaps saturate in H and respect the constant.
bool criterion3(Ctx& c) {
  const auto suite = default_bound_suite();
  const auto reports = verify(suite, RngStream(2025, {"acceptance_bounds"}), 2);
  const auto groups = grouped_reports(reports, suite);
  const auto& c2 = groups.at("c2_lf08");
  c.require(c2.size() == 4, "four corollary-2 horizons");

  const BoundReport* h100 = nullptr;
  const BoundReport* h200 = nullptr;
  for (const BoundReport& r : c2) {
    c.require(r.params.gamma * r.params.lipschitz_f < 1.0, "gamma*L_f < 1");
    c.log << "    H=" << r.params.horizon << " gap=" << format_g9(r.gap_mean)
          << " se=" << format_g9(r.gap_se) << " bound=" << format_g9(r.bound)
          << "\n";
    if (r.params.horizon == 100) h100 = &r;
    if (r.params.horizon == 200) h200 = &r;
  }
  c.require(h100 && h200, "H=100 and H=200 present");
  if (h100 && h200) {
    const double pooled =
        std::sqrt(h100->gap_se * h100->gap_se + h200->gap_se * h200->gap_se);
    c.require(h200->gap_mean - h100->gap_mean <= 3.0 * pooled,
              "gap(H=200) - gap(H=100) <= 3 * pooled SE");
    c.require(h200->gap_mean <= h200->bound,
              "gap(H=200) within the explicit C2 constant");
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// 4. Gaussian-norm lemma.
bool criterion4(Ctx& c) {
  RngStream rng(42, {"acceptance_chi"});
  for (int d : {1, 3, 7, 32}) {
    for (double sigma : {0.1, 0.2, 0.3}) {
      const int n = 100000;
      double sum = 0.0, sum_sq = 0.0;
      num::RngStream stream = rng.child(d).child(
          static_cast<std::uint64_t>(std::lround(sigma * 10)));
      for (int i = 0; i < n; ++i) {
        const double norm = (sigma * stream.normal_vector(d)).norm();
        sum += norm;
        sum_sq += norm * norm;
      }
      const double mean = sum / n;
      const double se =
          std::sqrt((sum_sq / n - mean * mean) / static_cast<double>(n));
      const double exact = num::chi_mean(d, sigma);
      std::ostringstream what;
      what << "d=" << d << " sigma=" << sigma << ": |" << mean << " - "
           << exact << "| <= 3*" << se;
      c.require(std::abs(mean - exact) <= 3.0 * se, what.str());
      c.require(exact <= sigma * std::sqrt(static_cast<double>(d)) + 1e-15,
                "chi_mean <= sigma*sqrt(d)");
    }
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// 5. Pathwise deviation-recursion audit on the certified scenarios.
bool criterion5(Ctx& c) {
  const auto suite = default_bound_suite();
  RngStream rng(7, {"acceptance_audit"});
  int audited = 0;
  for (const BoundScenario& sc : suite) {
    if (sc.sigma != 0.0) continue;  // the pathwise lemma form is noise-free
    std::vector<int> hs = sc.horizons;
    if (hs.empty()) hs.push_back(sc.env.horizon);
    LinearEnvConfig env_cfg = sc.env;
    env_cfg.horizon = *std::max_element(hs.begin(), hs.end());
    const LinearLipschitzEnv env(env_cfg);

    PolicyParams expert;
    expert.weights = {sc.expert_gain};
    expert.biases = {sc.expert_bias};
    expert.log_std = Vector::Constant(sc.expert_gain.rows(), -20.0);
    PolicyParams policy;
    policy.weights = {sc.policy_gain};
    policy.biases = {sc.policy_bias};
    policy.log_std = Vector::Constant(sc.policy_gain.rows(), -20.0);
    for (int i = 0; i < sc.drift_steps; ++i)
      policy.biases[0][0] += sc.drift_bias_step;

    RngStream lambda_rng = rng.child("lambda");
    const double lambda = estimate_lambda(policy, sc.box, 1, lambda_rng);
    const double drive =
        lambda * sc.eps_s + offline_gap(policy, expert, sc.box);
    const DeviationAudit audit = audit_deviation(
        env, expert, policy, sc.eps_s, drive, 1000, rng.child(sc.name));
    std::ostringstream what;
    what << sc.name << ": " << audit.violations << " violations over "
         << audit.steps_checked << " steps";
    c.require(audit.violations == 0, what.str());
    c.log << "    " << sc.name << ": max realized/bound ratio "
          << format_g9(audit.max_ratio) << "\n";
    ++audited;
  }
  c.require(audited >= 4, "audited scenario count");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 6. Pinsker sweep.
bool criterion6(Ctx& c) {
  const PinskerResult worked = pinsker_check(0.0, 1.0, 0.1, 1.0);
  c.require(std::abs(worked.l1 - 0.0797) <= 1e-3,
            "L1(N(0,1), N(0.1,1)) near 0.0797");
  c.require(std::abs(worked.pinsker - 0.1) <= 1e-12, "sqrt(2KL) = 0.1");
  c.log << "    worked case: L1=" << format_g9(worked.l1)
        << " sqrt(2KL)=" << format_g9(worked.pinsker) << "\n";

  RngStream rng(11, {"acceptance_pinsker"});
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const PinskerResult r =
        pinsker_check(2.0 * rng.normal(), std::exp(rng.uniform(-2.5, 1.5)),
                      2.0 * rng.normal(), std::exp(rng.uniform(-2.5, 1.5)));
    if (!r.holds) ++violations;
  }
  c.require(violations == 0, "zero violations over 1e4 random pairs");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 7. Gradient correctness against finite differences.
bool criterion7(Ctx& c) {
  RngStream rng(17, {"acceptance_grad"});
  double worst_param = 0.0, worst_input = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d_obs = 1 + rng.uniform_int(0, 2);
    const int d_act = 1 + rng.uniform_int(0, 1);
    const std::vector<int> hidden =
        trial % 2 == 0 ? std::vector<int>{} : std::vector<int>{3};
    PolicyParams sampling =
        PolicyParams::init_mlp(d_obs, hidden, d_act, -0.4, rng);
    PolicyParams params = sampling;
    params.weights[0].array() += 0.01;

    std::vector<MinibatchItem> batch;
    for (int i = 0; i < 4; ++i) {
      MinibatchItem item;
      const Vector obs = rng.normal_vector(d_obs);
      const Vector act = sample_action(sampling, obs, rng);
      item.steps.emplace_back(obs, act);
      item.logp_old = log_prob(sampling, obs, act);
      item.advantage = rng.normal();
      batch.push_back(std::move(item));
    }

    for (JacobianMode mode :
         {JacobianMode::kFdHutchinson, JacobianMode::kExactNoFlow}) {
      LossConfig cfg;
      cfg.alpha = 0.05;
      cfg.beta = 0.05;
      cfg.probes = 4;
      cfg.jacobian_mode = mode;
      const RngStream probes(trial, {"probes"});
      const LossBreakdown lb = robust_loss(params, sampling, batch, cfg, probes);
      const PolicyGrads fd = oracles::fd_param_gradients(
          params,
          [&](const PolicyParams& q) {
            return robust_loss(q, sampling, batch, cfg, probes).grad_path_total;
          },
          1e-5);
      worst_param =
          std::max(worst_param, oracles::grads_relative_error(lb.grads, fd));
    }

    const Vector obs = rng.normal_vector(d_obs);
    const Vector act = sample_action(params, obs, rng);
    const Vector ad = input_grad_logprob(params, obs, act);
    const Vector fd_in = oracles::fd_vector_gradient(
        obs, [&](const Vector& s) { return log_prob(params, s, act); }, 1e-5);
    worst_input = std::max(
        worst_input, (ad - fd_in).norm() / std::max(1e-12, fd_in.norm()));
  }
  c.log << "    worst parameter-gradient rel error " << worst_param << "\n";
  c.log << "    worst input-gradient rel error " << worst_input << "\n";
  c.require(worst_param <= 1e-3, "robust_loss gradients within 1e-3 of FD");
  c.require(worst_input <= 1e-4, "input gradients within 1e-4 of FD");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 8. Estimator fidelity: fd-hutchinson vs exact penalty value.
bool criterion8(Ctx& c) {
  RngStream rng(23, {"acceptance_estimator"});
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d_obs = 1 + trial % 2;
    PolicyParams p = PolicyParams::init_mlp(
        d_obs, trial % 4 == 0 ? std::vector<int>{3} : std::vector<int>{}, 1,
        -0.3, rng);
    std::vector<std::pair<Vector, Vector>> batch;
    for (int i = 0; i < 512; ++i) {
      const Vector obs = rng.normal_vector(d_obs);
      batch.emplace_back(obs, sample_action(p, obs, rng));
    }
    const RngStream probes = rng.child("probes").child(trial);
    const double exact =
        jacobian_penalty(p, batch, 1e12, JacobianMode::kExactNoFlow, 1, 1e-4,
                         probes)
            .value;
    const double estimated =
        jacobian_penalty(p, batch, 1e12, JacobianMode::kFdHutchinson, 64,
                         1e-4, probes)
            .value;
    worst = std::max(worst, std::abs(estimated - exact) / exact);
  }
  c.log << "    worst relative deviation " << format_g9(worst) << "\n";
  c.require(worst <= 0.02, "fd-hutchinson within 2% of the exact value");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 9. Reduction to plain leave-one-out PPO.
bool criterion9(Ctx& c) {
  TrainConfig tc;
  tc.env.kind = EnvChoice::Kind::kLinear;
  tc.env.linear.a = Matrix::Constant(1, 1, 0.8);
  tc.env.linear.b = Matrix::Constant(1, 1, 0.2);
  tc.env.linear.goal = Vector::Zero(1);
  tc.env.linear.horizon = 10;
  tc.outer_steps = 12;
  tc.inner_updates = 10;
  tc.rollouts_per_context = 8;
  tc.contexts_per_iter = 16;
  tc.batch_size = 64;
  tc.learning_rate = 0.01;
  tc.eval_episodes = 16;
  tc.loss.alpha = 0.0;
  tc.loss.beta = 0.0;
  tc.perturb.channel = ObsChannel::kNone;
  tc.perturb.p_clean = 0.0;
  tc.curriculum.enabled = false;
  tc.seed = 7;

  const TrainResult trained = train(tc);
  const auto reference = ppo_reference::run(tc);
  c.require(trained.metrics.size() == reference.size(), "row count");
  double worst = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const MetricsRow& a = trained.metrics[i];
    const ppo_reference::RefRow& b = reference[i];
    c.require(a.env_steps == b.env_steps, "env step counts match");
    worst = std::max({worst, std::abs(a.mean_return - b.mean_return),
                      std::abs(a.success_rate - b.success_rate),
                      std::abs(a.loss_ppo - b.loss_ppo),
                      std::abs(a.grad_norm - b.grad_norm)});
  }
  c.log << "    worst metric deviation " << format_g9(worst) << " over "
        << reference.size() << " iterations\n";
  c.require(worst <= 1e-10, "metrics match the reference loop to 1e-10");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 10. Curriculum unit suite.
bool criterion10(Ctx& c) {
  CurriculumConfig cfg;
  CurriculumState s = CurriculumState::initial(cfg);
  s.eps_obs = 0.2;
  const CurriculumState next = curriculum_update(s, 1.0);
  c.require(next.p_ma == 0.9, "p_MA: 0 -> 0.9");
  c.require(next.eps_obs == 0.4, "eps_obs: 0.2 -> 0.4");

  CurriculumState cap = CurriculumState::initial(cfg);
  cap.eps_obs = cfg.obs_max;
  cap.eps_act = cfg.act_max;
  cap.p_ma = 1.0;
  const CurriculumState capped = curriculum_update(cap, 1.0);
  c.require(capped.eps_obs == cfg.obs_max, "cap holds at obs_max");
  c.require(capped.eps_act == cfg.act_max, "cap holds at act_max");

  CurriculumState floor = CurriculumState::initial(cfg);
  const CurriculumState floored = curriculum_update(floor, 0.0);
  c.require(floored.eps_obs == cfg.obs_min, "floor holds at obs_min");
  c.require(floored.eps_act == cfg.act_min, "floor holds at act_min");

  RngStream rng(31, {"acceptance_curriculum"});
  CurriculumState state = CurriculumState::initial(cfg);
  bool in_range = true;
  for (int i = 0; i < 10000; ++i) {
    state = curriculum_update(state, rng.uniform());
    in_range = in_range && state.eps_obs >= cfg.obs_min &&
               state.eps_obs <= cfg.obs_max && state.eps_act >= cfg.act_min &&
               state.eps_act <= cfg.act_max;
  }
  c.require(in_range, "levels stay within ranges over 1e4 random updates");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 11. Desk-scale robustness effect on the image env.
bool criterion11(Ctx& c) {
  const double t0 = now_seconds();

  auto make_arm = [](double alpha, double beta, std::uint64_t seed) {
    TrainConfig tc;
    tc.env.kind = EnvChoice::Kind::kPointGoalImage;
    tc.env.image.image_side = 16;
    tc.env.image.step_gain = 0.3;
    tc.env.image.horizon = 16;
    tc.env.image.success_radius = 0.25;
    tc.env.image.start_margin = 0.2;
    tc.env.image.rewards.w_proximity = 0.5;
    tc.env.image.rewards.w_progress = 0.25;
    tc.hidden = {16};
    tc.init_log_std = std::log(0.3);
    tc.outer_steps = 12;
    tc.inner_updates = 10;
    tc.rollouts_per_context = 6;
    tc.contexts_per_iter = 8;
    tc.batch_size = 64;
    tc.learning_rate = 0.05;
    tc.eval_episodes = 25;
    tc.threads = 2;
    tc.loss.alpha = alpha;
    tc.loss.beta = beta;
    tc.perturb.channel = ObsChannel::kMixed;
    tc.perturb.p_clean = 0.15;
    tc.seed = seed;
    return tc;
  };

  PerturbationSpec action_noise;
  action_noise.action_sigma = 0.2;
  PerturbationSpec rotation;
  rotation.channel = ObsChannel::kRotation;
  rotation.obs_level = 1.0;

  std::vector<double> robust_sr[2], base_sr[2];
  for (std::uint64_t seed : {101, 102, 103, 104, 105}) {
    for (int arm = 0; arm < 2; ++arm) {
      const bool is_robust = arm == 0;
      const TrainConfig tc =
          make_arm(is_robust ? 0.005 : 0.0, is_robust ? 0.0005 : 0.0, seed);
      const TrainResult result = train(tc);
      std::unique_ptr<Env> env = make_env(tc.env);
      const PerturbationSpec specs[2] = {action_noise, rotation};
      for (int cond = 0; cond < 2; ++cond) {
        const EvalResult ev =
            evaluate(result.params, *env, 50, specs[cond],
                     RngStream(seed, {"robustness_eval"}).child(arm).child(cond));
        (is_robust ? robust_sr : base_sr)[cond].push_back(ev.success_rate);
      }
    }
  }

  // One-sided Welch check: the baseline must not be ahead at the 95% level.
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto var_of = [&](const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  static const double t95[] = {6.314, 2.920, 2.353, 2.132, 2.015,
                               1.943, 1.895, 1.860, 1.833, 1.812};
  const char* cond_names[2] = {"action_sigma_0.2", "rotation"};
  for (int cond = 0; cond < 2; ++cond) {
    const double mr = mean_of(robust_sr[cond]);
    const double mb = mean_of(base_sr[cond]);
    const double vr = var_of(robust_sr[cond]);
    const double vb = var_of(base_sr[cond]);
    const double n = 5.0;
    const double se = std::sqrt(vr / n + vb / n);
    c.log << "    " << cond_names[cond] << ": robust SR=" << format_g9(mr)
          << " baseline SR=" << format_g9(mb) << " se_diff=" << format_g9(se)
          << "\n";
    if (se == 0.0) {
      c.require(mb <= mr, std::string(cond_names[cond]) +
                              ": baseline not ahead (zero variance)");
    } else {
      const double df_num = (vr / n + vb / n) * (vr / n + vb / n);
      const double df_den = (vr / n) * (vr / n) / (n - 1) +
                            (vb / n) * (vb / n) / (n - 1);
      const int df = std::max(1, static_cast<int>(df_num / df_den));
      const double crit = t95[std::min(df, 10) - 1];
      c.require((mb - mr) / se <= crit,
                std::string(cond_names[cond]) +
                    ": baseline ahead at the 95% level");
    }
  }
  const double elapsed = now_seconds() - t0;
  c.log << "    runtime " << elapsed << " s\n";
  c.require(elapsed < 1800.0, "runtime under 30 minutes");
  return c.ok;
}

// ---------------------------------------------------------------------------
// 12. Determinism of every subcommand's CSV outputs.
bool criterion12(Ctx& c) {
  const fs::path root = fs::temp_directory_path() / "rpt_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  auto write_json = [&](const fs::path& p, const nlohmann::json& j) {
    std::ofstream out(p);
    out << j.dump(2);
  };

  nlohmann::json jt;
  jt["train.outer_steps"] = 2;
  jt["train.inner_updates"] = 3;
  jt["train.contexts_per_iter"] = 3;
  jt["train.rollouts_per_context"] = 3;
  jt["train.eval_episodes"] = 4;
  jt["env.linear.state_dim"] = 1;
  jt["env.linear.horizon"] = 6;
  jt["perturb.channel"] = "vector_ball";
  jt["seed"] = 3;
  const fs::path cfg_train = root / "train.json";
  write_json(cfg_train, jt);
  c.require(cli::run({"train", "--config", cfg_train.string(), "--out",
                      (root / "t1").string()}) == 0,
            "train run 1");
  c.require(cli::run({"train", "--config", cfg_train.string(), "--out",
                      (root / "t2").string()}) == 0,
            "train run 2");
  c.require(slurp(root / "t1" / "metrics.csv") ==
                slurp(root / "t2" / "metrics.csv"),
            "train metrics byte-identical");

  nlohmann::json jb;
  jb["bounds.rollouts"] = 200;
  jb["bounds.threads"] = 2;
  const fs::path cfg_bounds = root / "bounds.json";
  write_json(cfg_bounds, jb);
  c.require(cli::run({"verify-bounds", "--config", cfg_bounds.string(),
                      "--out", (root / "b1").string()}) == 0,
            "verify-bounds run 1");
  c.require(cli::run({"verify-bounds", "--config", cfg_bounds.string(),
                      "--out", (root / "b2").string()}) == 0,
            "verify-bounds run 2");
  c.require(slurp(root / "b1" / "bound_report.csv") ==
                slurp(root / "b2" / "bound_report.csv"),
            "bound report byte-identical");

  nlohmann::json je = jt;
  je["eval.checkpoint"] = (root / "t1" / "checkpoint_final.rptckpt").string();
  je["eval.episodes"] = 5;
  const fs::path cfg_eval = root / "eval.json";
  write_json(cfg_eval, je);
  c.require(cli::run({"eval", "--config", cfg_eval.string(), "--out",
                      (root / "e1").string()}) == 0,
            "eval run 1");
  c.require(cli::run({"eval", "--config", cfg_eval.string(), "--out",
                      (root / "e2").string()}) == 0,
            "eval run 2");
  c.require(slurp(root / "e1" / "eval.csv") == slurp(root / "e2" / "eval.csv"),
            "eval CSV byte-identical");

  nlohmann::json jd;
  jd["demo.levels"] = {0.0, 1.0};
  jd["demo.image_size"] = 16;
  const fs::path cfg_demo = root / "demo.json";
  write_json(cfg_demo, jd);
  c.require(cli::run({"perturb-demo", "--config", cfg_demo.string(), "--out",
                      (root / "d1").string()}) == 0,
            "perturb-demo run 1");
  c.require(cli::run({"perturb-demo", "--config", cfg_demo.string(), "--out",
                      (root / "d2").string()}) == 0,
            "perturb-demo run 2");
  for (const auto& entry : fs::directory_iterator(root / "d1")) {
    if (entry.path().extension() != ".pgm") continue;
    c.require(slurp(entry.path()) ==
                  slurp(root / "d2" / entry.path().filename()),
              "demo image byte-identical: " + entry.path().filename().string());
  }
  return c.ok;
}

struct Entry {
  int id;
  const char* title;
  std::function<bool(Ctx&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Entry> criteria = {
      {1, "bound certification (Theorems 1-3) across the scenario grid",
       criterion1},
      {2, "Corollary 1: linear-in-H gap control", criterion2},
      {3, "Corollary 2: horizon-independent discounted gap", criterion3},
      {4, "Gaussian-norm lemma: exact mean and sqrt(d) bound", criterion4},
      {5, "deviation-recursion audit: zero pathwise violations", criterion5},
      {6, "Pinsker sweep: L1 <= sqrt(2 KL)", criterion6},
      {7, "gradient correctness against finite differences", criterion7},
      {8, "fd-hutchinson fidelity to the exact penalty", criterion8},
      {9, "reduction to plain leave-one-out PPO", criterion9},
      {10, "curriculum unit suite", criterion10},
      {11, "desk-scale robustness effect on the image env", criterion11},
      {12, "byte-identical CSV outputs on rerun", criterion12},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Entry& e : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), e.id) == selected.end())
      continue;
    const double t0 = now_seconds();
    Ctx ctx;
    bool ok = false;
    try {
      ok = e.fn(ctx);
    } catch (const std::exception& ex) {
      ctx.log << "    exception: " << ex.what() << "\n";
      ok = false;
    }
    const double dt = now_seconds() - t0;
    std::printf("[criterion %2d] %s — %s (%.1f s)\n", e.id,
                ok ? "PASS" : "FAIL", e.title, dt);
    std::cout << ctx.log.str();
    if (!ok) ++failures;
  }
  if (failures > 0)
    std::printf("%d criterion(s) failed\n", failures);
  else
    std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
