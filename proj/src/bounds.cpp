#include "rpt/bounds.hpp"

#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rpt/linalg.hpp"
#include "rpt/trainer.hpp"

namespace rpt {

TheoremKind parse_theorem(const std::string& name) {
  if (name == "T1") return TheoremKind::kT1;
  if (name == "T2") return TheoremKind::kT2;
  if (name == "T3") return TheoremKind::kT3;
  if (name == "C1") return TheoremKind::kC1;
  if (name == "C2") return TheoremKind::kC2;
  throw std::invalid_argument("unknown theorem kind '" + name + "'");
}

std::string theorem_name(TheoremKind kind) {
  switch (kind) {
    case TheoremKind::kT1: return "T1";
    case TheoremKind::kT2: return "T2";
    case TheoremKind::kT3: return "T3";
    case TheoremKind::kC1: return "C1";
    case TheoremKind::kC2: return "C2";
  }
  throw std::invalid_argument("unknown theorem kind");
}

double BoundParams::sum_deltas() const {
  return std::accumulate(deltas.begin(), deltas.end(), 0.0);
}

double deviation_bound(double lipschitz_f, double drive, int t) {
  if (t <= 0 || drive == 0.0) return 0.0;
  if (std::abs(lipschitz_f - 1.0) < 1e-12)
    return drive * t * lipschitz_f;
  return drive * lipschitz_f * (std::pow(lipschitz_f, t) - 1.0) /
         (lipschitz_f - 1.0);
}

namespace {

void check_nonneg(double v, const char* name) {
  if (!(v >= 0.0))
    throw std::domain_error(std::string("theorem_bound: ") + name +
                            " must be non-negative");
}

double drive_for(TheoremKind kind, const BoundParams& p) {
  const double noise = p.sigma * std::sqrt(static_cast<double>(p.action_dim));
  switch (kind) {
    case TheoremKind::kT1:
      return p.lambda * p.eps_s + p.eps_offline;
    case TheoremKind::kT2:
      return p.eps_offline + p.sum_deltas() + noise;
    case TheoremKind::kT3:
    case TheoremKind::kC2:
      return p.lambda * p.eps_s + p.eps_offline + p.sum_deltas() + noise;
    case TheoremKind::kC1:
      return p.lambda * p.eps_s;
  }
  throw std::domain_error("theorem_bound: unknown kind");
}

double summation_bound(const BoundParams& p, double drive) {
  double total = 0.0;
  for (int t = 1; t <= p.horizon; ++t)
    total += deviation_bound(p.lipschitz_f, drive, t) + drive;
  return p.lipschitz_r * total;
}

}  // namespace

double theorem_bound(TheoremKind kind, const BoundParams& p) {
  if (p.horizon < 1) throw std::domain_error("theorem_bound: horizon must be >= 1");
  if (p.action_dim < 1)
    throw std::domain_error("theorem_bound: action_dim must be >= 1");
  check_nonneg(p.lipschitz_f, "L_f");
  check_nonneg(p.lipschitz_r, "L_r");
  check_nonneg(p.lambda, "lambda");
  check_nonneg(p.eps_s, "eps_s");
  check_nonneg(p.eps_offline, "eps_offline");
  check_nonneg(p.sigma, "sigma");
  for (double d : p.deltas) check_nonneg(d, "delta_i");

  switch (kind) {
    case TheoremKind::kT1:
    case TheoremKind::kT2:
    case TheoremKind::kT3:
      return summation_bound(p, drive_for(kind, p));
    case TheoremKind::kC1:
      if (p.eps_offline != 0.0)
        throw std::domain_error("theorem_bound: C1 requires eps_offline = 0");
      if (!(p.lipschitz_f < 1.0))
        throw std::domain_error("theorem_bound: C1 requires L_f < 1");
      return p.horizon * p.lipschitz_r * p.lambda * p.eps_s /
             (1.0 - p.lipschitz_f);
    case TheoremKind::kC2: {
      if (!(p.lipschitz_f > 0.0 && p.lipschitz_f < 1.0))
        throw std::domain_error("theorem_bound: C2 requires L_f in (0, 1)");
      if (!(p.gamma > 0.0 && p.gamma < 1.0))
        throw std::domain_error("theorem_bound: C2 requires gamma in (0, 1)");
      if (!(p.gamma * p.lipschitz_f < 1.0))
        throw std::domain_error("theorem_bound: C2 requires gamma*L_f < 1");
      const double c = drive_for(kind, p);
      const double lf = p.lipschitz_f;
      const double g = p.gamma;
      return p.lipschitz_r * c *
             (lf / (1.0 - lf) * (1.0 / (1.0 - g) - 1.0 / (1.0 - g * lf)) +
              1.0 / (1.0 - g));
    }
  }
  throw std::domain_error("theorem_bound: unknown kind");
}

GapEstimate empirical_gap(const LinearLipschitzEnv& env,
                          const PolicyParams& expert,
                          const PolicyParams& policy,
                          const PerturbationSpec& spec, int n_rollouts,
                          const num::RngStream& rng, double gamma) {
  if (n_rollouts < 1)
    throw std::domain_error("empirical_gap: n_rollouts must be >= 1");
  spec.validate();
  const std::uint64_t context_seed = rng.child("gap_contexts").key();
  const int horizon = env.horizon();

  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n_rollouts; ++i) {
    num::RngStream stream = rng.child("rollout").child(i);
    Vector s = env.sample_start(
        ContextSeed{context_seed, static_cast<std::uint64_t>(i)});
    Vector s_star = s;
    double gap = 0.0;
    double discount = 1.0;
    for (int t = 1; t <= horizon; ++t) {
      const Vector a_star = mean_action(expert, s_star);
      const Vector delivered = Vector(
          perturb_observation(Matrix(s), spec, stream).col(0));
      const Vector a =
          perturb_action(mean_action(policy, delivered), spec.action_sigma,
                         stream);
      gap += discount *
             (env.lipschitz_reward(s_star, a_star) - env.lipschitz_reward(s, a));
      s_star = env.transition(s_star, a_star);
      s = env.transition(s, a);
      discount *= gamma;
    }
    sum += gap;
    sum_sq += gap * gap;
  }
  GapEstimate g;
  g.rollouts = n_rollouts;
  g.mean = sum / n_rollouts;
  if (n_rollouts > 1) {
    const double var =
        std::max(0.0, (sum_sq - n_rollouts * g.mean * g.mean) / (n_rollouts - 1));
    g.se = std::sqrt(var / n_rollouts);
  }
  return g;
}

DeviationAudit audit_deviation(const LinearLipschitzEnv& env,
                               const PolicyParams& expert,
                               const PolicyParams& policy, double eps_s,
                               double drive, int n_rollouts,
                               const num::RngStream& rng) {
  DeviationAudit audit;
  audit.rollouts = n_rollouts;
  const std::uint64_t context_seed = rng.child("audit_contexts").key();
  const double lf = env.lipschitz_f();
  PerturbationSpec spec;
  spec.channel = ObsChannel::kVectorBall;
  spec.obs_level = eps_s;

  for (int i = 0; i < n_rollouts; ++i) {
    num::RngStream stream = rng.child("rollout").child(i);
    Vector s = env.sample_start(
        ContextSeed{context_seed, static_cast<std::uint64_t>(i)});
    Vector s_star = s;
    for (int t = 1; t <= env.horizon(); ++t) {
      const Vector delivered =
          Vector(perturb_observation(Matrix(s), spec, stream).col(0));
      s = env.transition(s, mean_action(policy, delivered));
      s_star = env.transition(s_star, mean_action(expert, s_star));
      const double realized = (s - s_star).norm();
      const double bound = deviation_bound(lf, drive, t);
      ++audit.steps_checked;
      if (realized > bound + 1e-9) ++audit.violations;
      if (bound > 0.0)
        audit.max_ratio = std::max(audit.max_ratio, realized / bound);
    }
  }
  return audit;
}

namespace {

void require_linear(const PolicyParams& p, const char* what) {
  if (!p.is_linear())
    throw std::invalid_argument(
        std::string(what) +
        ": only linear policies have exact box sup-norms; use sampled "
        "estimation for nonlinear networks");
}

}  // namespace

double offline_gap(const PolicyParams& policy, const PolicyParams& expert,
                   const StateBox& box) {
  require_linear(policy, "offline_gap");
  require_linear(expert, "offline_gap");
  const Matrix dk = policy.weights[0] - expert.weights[0];
  const Vector db = policy.biases[0] - expert.biases[0];
  if (dk.cols() != box.dim())
    throw std::invalid_argument("offline_gap: box dim mismatch");
  if (box.dim() > 24)
    throw std::invalid_argument("offline_gap: box dimension too large");

  double best = 0.0;
  const std::uint64_t corners = 1ULL << box.dim();
  Vector v(box.dim());
  for (std::uint64_t mask = 0; mask < corners; ++mask) {
    for (Eigen::Index i = 0; i < box.dim(); ++i)
      v[i] = (mask >> i) & 1 ? box.upper[i] : box.lower[i];
    best = std::max(best, (dk * v + db).norm());
  }
  return best;
}

double policy_drift(const PolicyParams& next, const PolicyParams& prev,
                    const StateBox& box) {
  return offline_gap(next, prev, box);
}

namespace {

double gaussian_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

// Adaptive Simpson on |p - q|.
double simpson_abs_diff(double mu_p, double sp, double mu_q, double sq,
                        double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  auto f = [&](double x) {
    return std::abs(gaussian_pdf(x, mu_p, sp) - gaussian_pdf(x, mu_q, sq));
  };
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_abs_diff(mu_p, sp, mu_q, sq, a, m, fa, flm, fm, left,
                          tol / 2.0, depth - 1) +
         simpson_abs_diff(mu_p, sp, mu_q, sq, m, b, fm, frm, fb, right,
                          tol / 2.0, depth - 1);
}

}  // namespace

PinskerResult pinsker_check(double mu_p, double sigma_p, double mu_q,
                            double sigma_q) {
  if (!(sigma_p > 0.0 && sigma_q > 0.0))
    throw std::domain_error("pinsker_check: sigma must be > 0");
  const double kl = std::log(sigma_q / sigma_p) +
                    (sigma_p * sigma_p + (mu_p - mu_q) * (mu_p - mu_q)) /
                        (2.0 * sigma_q * sigma_q) -
                    0.5;
  const double smax = std::max(sigma_p, sigma_q);
  const double a = std::min(mu_p, mu_q) - 12.0 * smax;
  const double b = std::max(mu_p, mu_q) + 12.0 * smax;
  auto f = [&](double x) {
    return std::abs(gaussian_pdf(x, mu_p, sigma_p) -
                    gaussian_pdf(x, mu_q, sigma_q));
  };
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  PinskerResult r;
  r.l1 = simpson_abs_diff(mu_p, sigma_p, mu_q, sigma_q, a, b, fa, fm, fb,
                          whole, 1e-11, 48);
  r.pinsker = std::sqrt(2.0 * kl);
  r.holds = r.l1 <= r.pinsker + 1e-9;
  return r;
}

std::vector<GradDominancePoint> grad_dominance_check(
    const PolicyParams& params,
    const std::vector<std::pair<Vector, Vector>>& points) {
  std::vector<GradDominancePoint> out;
  out.reserve(points.size());
  for (const auto& [obs, action] : points) {
    GradDominancePoint p;
    p.density = std::exp(log_prob(params, obs, action));
    p.grad_logpi_norm = input_grad_logprob(params, obs, action).norm();
    p.grad_pi_norm = p.density * p.grad_logpi_norm;
    p.comparable = p.density <= 1.0;
    out.push_back(p);
  }
  return out;
}

namespace {

PolicyParams linear_policy(const Matrix& gain, const Vector& bias) {
  PolicyParams p;
  p.weights = {gain};
  p.biases = {bias};
  p.log_std = Vector::Constant(gain.rows(), -20.0);
  p.validate();
  return p;
}

BoundReport run_scenario(const BoundScenario& sc, int horizon,
                         const num::RngStream& rng) {
  LinearEnvConfig env_cfg = sc.env;
  env_cfg.horizon = horizon;
  const LinearLipschitzEnv env(env_cfg);

  const PolicyParams expert = linear_policy(sc.expert_gain, sc.expert_bias);

  // Snapshot chain: init, then drift_steps bias shifts.
  std::vector<PolicyParams> snapshots;
  snapshots.push_back(linear_policy(sc.policy_gain, sc.policy_bias));
  for (int i = 0; i < sc.drift_steps; ++i) {
    PolicyParams next = snapshots.back();
    next.biases[0][0] += sc.drift_bias_step;
    snapshots.push_back(std::move(next));
  }

  BoundParams p;
  p.horizon = horizon;
  p.lipschitz_f = env.lipschitz_f();
  p.lipschitz_r = env.lipschitz_r();
  p.eps_s = sc.eps_s;
  p.sigma = sc.sigma;
  p.action_dim = static_cast<int>(env.action_dim());
  p.gamma = sc.gamma;
  p.eps_offline = offline_gap(snapshots.front(), expert, sc.box);
  for (std::size_t i = 1; i < snapshots.size(); ++i)
    p.deltas.push_back(policy_drift(snapshots[i], snapshots[i - 1], sc.box));
  num::RngStream lambda_rng = rng.child("lambda");
  double lambda = 0.0;
  for (const PolicyParams& snap : snapshots)
    lambda = std::max(lambda, estimate_lambda(snap, sc.box, 1, lambda_rng));
  p.lambda = lambda;

  PerturbationSpec spec;
  spec.channel = ObsChannel::kVectorBall;
  spec.obs_level = sc.eps_s;
  spec.action_sigma = sc.sigma;

  const double gamma = sc.kind == TheoremKind::kC2 ? sc.gamma : 1.0;
  const GapEstimate gap = empirical_gap(env, expert, snapshots.back(), spec,
                                        sc.rollouts, rng.child("gap"), gamma);

  BoundReport report;
  report.scenario = sc.name;
  report.kind = sc.kind;
  report.params = p;
  report.gap_mean = gap.mean;
  report.gap_se = gap.se;
  report.rollouts = gap.rollouts;
  report.bound = theorem_bound(sc.kind, p);
  report.satisfied = gap.mean + 3.0 * gap.se <= report.bound;
  return report;
}

}  // namespace

std::vector<BoundReport> verify(const std::vector<BoundScenario>& suite,
                                const num::RngStream& rng, int threads) {
  std::vector<std::pair<const BoundScenario*, int>> jobs;
  for (const BoundScenario& sc : suite) {
    std::vector<int> horizons = sc.horizons;
    if (horizons.empty()) horizons.push_back(sc.env.horizon);
    for (int h : horizons) jobs.emplace_back(&sc, h);
  }

  std::vector<BoundReport> reports(jobs.size());
  auto run_job = [&](std::size_t j) {
    const auto& [sc, h] = jobs[j];
    reports[j] = run_scenario(
        *sc, h, rng.child(sc->name).child(static_cast<std::uint64_t>(h)));
  };
  if (threads > 1) {
    std::vector<std::future<void>> futs;
    for (std::size_t j = 0; j < jobs.size(); ++j)
      futs.push_back(std::async(std::launch::async, run_job, j));
    for (auto& f : futs) f.get();
  } else {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  }
  return reports;
}

std::string bound_report_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream out;
  out << "theorem,H,L_f,L_r,lambda,eps_s,eps_off,sum_delta,sigma,d,gamma,"
         "gap_mean,gap_se,bound,satisfied\n";
  for (const BoundReport& r : reports) {
    const BoundParams& p = r.params;
    out << theorem_name(r.kind) << ',' << p.horizon << ','
        << format_g9(p.lipschitz_f) << ',' << format_g9(p.lipschitz_r) << ','
        << format_g9(p.lambda) << ',' << format_g9(p.eps_s) << ','
        << format_g9(p.eps_offline) << ',' << format_g9(p.sum_deltas()) << ','
        << format_g9(p.sigma) << ',' << p.action_dim << ','
        << format_g9(r.kind == TheoremKind::kC2 ? p.gamma : 1.0) << ','
        << format_g9(r.gap_mean) << ',' << format_g9(r.gap_se) << ','
        << format_g9(r.bound) << ',' << (r.satisfied ? "true" : "false")
        << '\n';
  }
  return out.str();
}

namespace {

BoundScenario make_1d_scenario(const std::string& name, TheoremKind kind,
                               double a, double b, double expert_gain,
                               double policy_gain, double eps_s, double sigma,
                               int horizon) {
  BoundScenario sc;
  sc.name = name;
  sc.kind = kind;
  sc.env.a = Matrix::Constant(1, 1, a);
  sc.env.b = Matrix::Constant(1, 1, b);
  sc.env.goal = Vector::Zero(1);
  sc.env.reward_scale = 1.0;
  sc.env.action_cost = 0.0;
  sc.env.horizon = horizon;
  sc.expert_gain = Matrix::Constant(1, 1, expert_gain);
  sc.expert_bias = Vector::Zero(1);
  sc.policy_gain = Matrix::Constant(1, 1, policy_gain);
  sc.policy_bias = Vector::Zero(1);
  sc.eps_s = eps_s;
  sc.sigma = sigma;
  sc.box = StateBox::symmetric(1, 1.0);
  return sc;
}

}  // namespace

std::vector<BoundScenario> default_bound_suite() {
  std::vector<BoundScenario> suite;

  // Expert policy, zero perturbation: bound and gap are both exactly zero.
  suite.push_back(make_1d_scenario("t1_expert_zero", TheoremKind::kT1, 0.8,
                                    0.2, -1.0, -1.0, 0.0, 0.0, 20));

  suite.push_back(make_1d_scenario("t1_lf08", TheoremKind::kT1, 0.8, 0.2,
                                    -1.0, -0.9, 0.05, 0.0, 20));
  suite.push_back(make_1d_scenario("t1_lf05", TheoremKind::kT1, 0.5, 0.25,
                                    -1.0, -0.9, 0.1, 0.0, 20));
  suite.push_back(make_1d_scenario("t1_lf095", TheoremKind::kT1, 0.95, 0.2,
                                    -2.0, -1.9, 0.1, 0.0, 20));

  BoundScenario t2 = make_1d_scenario("t2_lf095_drift", TheoremKind::kT2,
                                      0.95, 0.2, -2.0, -1.9, 0.0, 0.1, 20);
  t2.drift_steps = 5;
  t2.drift_bias_step = 0.01;
  suite.push_back(t2);

  // 2-d joint-perturbation scenario with drift.
  BoundScenario t3;
  t3.name = "t3_lf08_2d_drift";
  t3.kind = TheoremKind::kT3;
  t3.env.a = Vector{{0.8, 0.6}}.asDiagonal();
  t3.env.b = Vector{{0.2, 0.2}}.asDiagonal();
  t3.env.goal = Vector::Zero(2);
  t3.env.horizon = 20;
  t3.expert_gain = -Matrix::Identity(2, 2);
  t3.expert_bias = Vector::Zero(2);
  t3.policy_gain = -0.9 * Matrix::Identity(2, 2);
  t3.policy_bias = Vector::Zero(2);
  t3.drift_steps = 5;
  t3.drift_bias_step = 0.01;
  t3.eps_s = 0.05;
  t3.sigma = 0.2;
  t3.box = StateBox::symmetric(2, 1.0);
  suite.push_back(t3);

  suite.push_back(make_1d_scenario("t3_lf095_joint", TheoremKind::kT3, 0.95,
                                    0.2, -2.0, -1.9, 0.1, 0.2, 20));

  BoundScenario c1 = make_1d_scenario("c1_lf05", TheoremKind::kC1, 0.5, 0.25,
                                      -1.0, -1.0, 0.05, 0.0, 10);
  c1.horizons = {10, 50, 100};
  suite.push_back(c1);

  BoundScenario c2 = make_1d_scenario("c2_lf08", TheoremKind::kC2, 0.8, 0.2,
                                      -1.0, -0.9, 0.05, 0.1, 25);
  c2.gamma = 0.95;
  c2.horizons = {25, 50, 100, 200};
  suite.push_back(c2);

  return suite;
}

}  // namespace rpt
