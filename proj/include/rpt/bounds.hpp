#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rpt/envs.hpp"
#include "rpt/policy.hpp"

namespace rpt {

enum class TheoremKind { kT1, kT2, kT3, kC1, kC2 };

TheoremKind parse_theorem(const std::string& name);
std::string theorem_name(TheoremKind kind);

// Every constant appearing in the bound statements.
struct BoundParams {
  int horizon = 1;             // H
  double lipschitz_f = 0.0;    // L_f
  double lipschitz_r = 0.0;    // L_r
  double lambda = 0.0;         // policy Jacobian bound
  double eps_s = 0.0;          // observation radius
  double eps_offline = 0.0;    // initial policy gap
  std::vector<double> deltas;  // per-update drifts delta_i
  double sigma = 0.0;          // action noise std
  int action_dim = 1;          // d
  double gamma = 0.95;         // discount, kC2 only

  double sum_deltas() const;
};

// Unrolled state-deviation recursion d_{t+1} <= L_f (d_t + c) from d_0 = 0:
// c * L_f * (L_f^t - 1) / (L_f - 1), with the c*t*L_f limit at L_f = 1.
double deviation_bound(double lipschitz_f, double drive, int t);

// Explicit-constant bounds carried through the proofs (no big-O):
//   kT1: c = lambda*eps_s + eps_offline
//   kT2: c = eps_offline + sum(deltas) + sigma*sqrt(d)
//   kT3: c = lambda*eps_s + eps_offline + sum(deltas) + sigma*sqrt(d)
//        each with bound = L_r * sum_{t=1..H} (deviation_bound(L_f,c,t) + c)
//   kC1: H * L_r * lambda * eps_s / (1 - L_f)     [needs eps_offline = 0]
//   kC2: L_r * C * (L_f/(1-L_f) * (1/(1-gamma) - 1/(1-gamma*L_f))
//               + 1/(1-gamma)) with C the kT3 drive  [needs gamma*L_f < 1]
double theorem_bound(TheoremKind kind, const BoundParams& p);

struct GapEstimate {
  double mean = 0.0;
  double se = 0.0;
  int rollouts = 0;
};

// Monte Carlo estimate of E[J(pi*) - J(pi)] from paired rollouts sharing
// start states: the expert runs clean, the policy runs under vector-ball
// observation noise and Gaussian action noise per the perturbation spec.
// Returns use the env's Lipschitz reward; gamma < 1 gives the discounted
// variant.
GapEstimate empirical_gap(const LinearLipschitzEnv& env,
                          const PolicyParams& expert,
                          const PolicyParams& policy,
                          const PerturbationSpec& spec, int n_rollouts,
                          const num::RngStream& rng, double gamma = 1.0);

// Pathwise Lemma check on noise-free-action paired rollouts: realized
// |s_t - s_t*| against deviation_bound(L_f, drive, t) at every step.
struct DeviationAudit {
  int rollouts = 0;
  int steps_checked = 0;
  int violations = 0;
  double max_ratio = 0.0;  // worst realized / bound, bound > 0 steps only
};
DeviationAudit audit_deviation(const LinearLipschitzEnv& env,
                               const PolicyParams& expert,
                               const PolicyParams& policy, double eps_s,
                               double drive, int n_rollouts,
                               const num::RngStream& rng);

// Exact sup over the box of |(K - K*) s + (b - b*)|_2 for linear policies;
// the max of a convex function over a box is attained at a vertex.
double offline_gap(const PolicyParams& policy, const PolicyParams& expert,
                   const StateBox& box);

// Same mechanics between consecutive snapshots.
double policy_drift(const PolicyParams& next, const PolicyParams& prev,
                    const StateBox& box);

struct PinskerResult {
  double l1 = 0.0;       // integral |p - q| by adaptive quadrature
  double pinsker = 0.0;  // sqrt(2 KL(p||q))
  bool holds = false;    // l1 <= pinsker + 1e-9
};
PinskerResult pinsker_check(double mu_p, double sigma_p, double mu_q,
                            double sigma_q);

struct GradDominancePoint {
  double grad_pi_norm = 0.0;
  double grad_logpi_norm = 0.0;
  double density = 0.0;
  bool comparable = false;  // density <= 1, where the norm comparison applies
};
std::vector<GradDominancePoint> grad_dominance_check(
    const PolicyParams& params,
    const std::vector<std::pair<Vector, Vector>>& points);

// One certification scenario on a linear env with linear policies.
struct BoundScenario {
  std::string name;
  TheoremKind kind = TheoremKind::kT1;
  LinearEnvConfig env;
  Matrix expert_gain;
  Vector expert_bias;
  Matrix policy_gain;
  Vector policy_bias;
  int drift_steps = 0;          // number of bias-shift snapshots after init
  double drift_bias_step = 0.0; // bias[0] increment per snapshot
  double eps_s = 0.0;
  double sigma = 0.0;
  double gamma = 0.95;          // kC2 only
  std::vector<int> horizons;    // empty: use env.horizon
  int rollouts = 1000;
  StateBox box;
};

struct BoundReport {
  std::string scenario;
  TheoremKind kind = TheoremKind::kT1;
  BoundParams params;
  double gap_mean = 0.0;
  double gap_se = 0.0;
  double bound = 0.0;
  bool satisfied = false;  // gap_mean + 3*gap_se <= bound
  int rollouts = 0;
};

// Assembles exact constants, estimates the gap, and compares; one report
// per (scenario, horizon). Scenarios own labeled sub-streams, so threads
// do not change the result.
std::vector<BoundReport> verify(const std::vector<BoundScenario>& suite,
                                const num::RngStream& rng, int threads = 1);

std::string bound_report_csv(const std::vector<BoundReport>& reports);

// The shipped certification suite spanning L_f in {0.5, 0.8, 0.95},
// eps_s in {0, 0.05, 0.1}, sigma in {0, 0.1, 0.2}, drift in {none, 5x0.01},
// plus the corollary sweeps.
std::vector<BoundScenario> default_bound_suite();

}  // namespace rpt
