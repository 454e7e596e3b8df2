#pragma once

#include <utility>
#include <vector>

#include "rpt/policy.hpp"
#include "rpt/rollout.hpp"

namespace rpt {

// How the clamped input-Jacobian penalty E[min(|grad_s log pi|^2, G_max)]
// is evaluated:
//  - kFdHutchinson: random-direction symmetric finite differences of
//    log pi, an unbiased estimator of the squared gradient norm that is
//    differentiable in theta with first-order autodiff only. Used for both
//    the value and the parameter gradient.
//  - kExactNoFlow: the value is the exact clamped norm from the tape;
//    parameter gradients flow only through the unclamped finite-difference
//    estimator. Kept as the oracle the estimator is tested against.
enum class JacobianMode { kExactNoFlow, kFdHutchinson };

JacobianMode parse_jacobian_mode(const std::string& name);
std::string jacobian_mode_name(JacobianMode mode);

struct LossConfig {
  double clip_low = 0.2;
  double clip_high = 0.2;
  double alpha = 0.005;   // Jacobian weight
  double beta = 0.0005;   // smoothness weight
  double g_max = 100.0;   // gradient clamp
  JacobianMode jacobian_mode = JacobianMode::kFdHutchinson;
  int probes = 8;          // m
  double probe_step = 1e-4;  // h

  void validate() const;
};

// Gradient container with the same layout as PolicyParams.
struct PolicyGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Vector log_std;

  static PolicyGrads from_list(const PolicyParams& shape,
                               const std::vector<Matrix>& flat);
  double global_norm() const;
  double mean_net_norm() const;
  void scale_in_place(double factor);
};

struct PenaltyResult {
  double value = 0.0;            // the penalty as reported in the loss
  double grad_path_value = 0.0;  // value of the expression gradients flow through
  PolicyGrads grads;
};

struct LossBreakdown {
  double ppo = 0.0;
  double jac = 0.0;
  double smooth = 0.0;
  double total = 0.0;            // ppo + alpha*jac + beta*smooth, exactly
  double jac_grad_value = 0.0;   // estimator value behind the jac gradient
  double grad_path_total = 0.0;  // the function the returned gradient differentiates
  PolicyGrads grads;
  double grad_norm = 0.0;
  double grad_norm_mean_net = 0.0;
  double grad_norm_log_std = 0.0;
};

// Clipped PPO surrogate -min(eta*A, clip(eta, 1-eps_low, 1+eps_high)*A)
// with eta = exp(logp_new - logp_old).
double ppo_term(double logp_new, double logp_old, double advantage,
                double eps_low, double eps_high);

// Clamped input-Jacobian penalty over a batch of (obs, action) pairs.
PenaltyResult jacobian_penalty(
    const PolicyParams& params,
    const std::vector<std::pair<Vector, Vector>>& batch, double g_max,
    JacobianMode mode, int probes, double probe_step, num::RngStream rng);

// Mean squared gap between current and reference mean actions; gradients
// flow to params only.
PenaltyResult smooth_penalty(const PolicyParams& params,
                             const PolicyParams& ref_params,
                             const std::vector<Vector>& states);

// Full objective L_PPO + alpha*R_Jac + beta*R_Smooth on a minibatch.
// Zero-weight penalties are skipped entirely (no probe draws). The rng is
// taken by value so a call is a deterministic function of (params, batch).
LossBreakdown robust_loss(const PolicyParams& params,
                          const PolicyParams& ref_params,
                          const std::vector<MinibatchItem>& batch,
                          const LossConfig& config, num::RngStream rng);

}  // namespace rpt
