#include "rpt/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace rpt {

using num::Tape;
using num::Var;

JacobianMode parse_jacobian_mode(const std::string& name) {
  if (name == "exact-no-flow") return JacobianMode::kExactNoFlow;
  if (name == "fd-hutchinson") return JacobianMode::kFdHutchinson;
  throw std::invalid_argument("unknown jacobian mode '" + name + "'");
}

std::string jacobian_mode_name(JacobianMode mode) {
  return mode == JacobianMode::kExactNoFlow ? "exact-no-flow"
                                            : "fd-hutchinson";
}

void LossConfig::validate() const {
  if (!(clip_low > 0.0 && clip_low < 1.0))
    throw std::invalid_argument("loss: clip_low outside (0, 1)");
  if (!(clip_high > 0.0 && clip_high < 1.0))
    throw std::invalid_argument("loss: clip_high outside (0, 1)");
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("loss: alpha/beta must be >= 0");
  if (!(g_max > 0.0)) throw std::invalid_argument("loss: g_max must be > 0");
  if (probes < 1) throw std::invalid_argument("loss: probe count must be >= 1");
  if (!(probe_step > 0.0))
    throw std::invalid_argument("loss: probe step must be > 0");
}

PolicyGrads PolicyGrads::from_list(const PolicyParams& shape,
                                   const std::vector<Matrix>& flat) {
  PolicyGrads g;
  std::size_t at = 0;
  for (std::size_t l = 0; l < shape.weights.size(); ++l) {
    g.weights.push_back(flat[at++]);
    g.biases.push_back(Vector(flat[at++].col(0)));
  }
  g.log_std = Vector(flat[at].col(0));
  return g;
}

double PolicyGrads::mean_net_norm() const {
  double sq = 0.0;
  for (const Matrix& w : weights) sq += w.squaredNorm();
  for (const Vector& b : biases) sq += b.squaredNorm();
  return std::sqrt(sq);
}

double PolicyGrads::global_norm() const {
  const double m = mean_net_norm();
  return std::sqrt(m * m + log_std.squaredNorm());
}

void PolicyGrads::scale_in_place(double factor) {
  for (Matrix& w : weights) w *= factor;
  for (Vector& b : biases) b *= factor;
  log_std *= factor;
}

double ppo_term(double logp_new, double logp_old, double advantage,
                double eps_low, double eps_high) {
  const double ratio = std::exp(logp_new - logp_old);
  const double clipped =
      std::min(std::max(ratio, 1.0 - eps_low), 1.0 + eps_high);
  return -std::min(ratio * advantage, clipped * advantage);
}

namespace {

void check_same_architecture(const PolicyParams& a, const PolicyParams& b) {
  bool ok = a.weights.size() == b.weights.size() &&
            a.log_std.size() == b.log_std.size();
  for (std::size_t l = 0; ok && l < a.weights.size(); ++l)
    ok = a.weights[l].rows() == b.weights[l].rows() &&
         a.weights[l].cols() == b.weights[l].cols();
  if (!ok)
    throw std::invalid_argument("smooth_penalty: architecture mismatch");
}

Var ppo_item_expr(Tape& tape, const PolicyVars& cur, const MinibatchItem& item,
                  double eps_low, double eps_high) {
  Var lp_new = cur.log_prob(tape.constant(item.steps[0].first),
                            tape.constant(item.steps[0].second));
  for (std::size_t s = 1; s < item.steps.size(); ++s)
    lp_new = lp_new + cur.log_prob(tape.constant(item.steps[s].first),
                                   tape.constant(item.steps[s].second));
  Var ratio = exp(lp_new - tape.constant(item.logp_old));
  Var clipped = clamp_min(clamp_max(ratio, 1.0 + eps_high), 1.0 - eps_low);
  return scale(min(scale(ratio, item.advantage), scale(clipped, item.advantage)),
               -1.0);
}

// Mean over the batch of the per-sample Hutchinson estimate of
// |grad_s log pi|^2, optionally clamped at g_max per sample.
Var jac_fd_expr(Tape& tape, const PolicyVars& cur,
                const std::vector<std::pair<Vector, Vector>>& batch,
                int probes, double h, num::RngStream& rng, bool clamp,
                double g_max) {
  const double d = static_cast<double>(batch.front().first.size());
  Var acc = tape.constant(0.0);
  for (const auto& [obs, action] : batch) {
    Var a = tape.constant(action);
    Var sample_acc = tape.constant(0.0);
    for (int j = 0; j < probes; ++j) {
      const Vector v = rng.sphere_vector(obs.size());
      Var lp_plus = cur.log_prob(tape.constant(Vector(obs + h * v)), a);
      Var lp_minus = cur.log_prob(tape.constant(Vector(obs - h * v)), a);
      sample_acc = sample_acc + square(scale(lp_plus - lp_minus, 1.0 / (2.0 * h)));
    }
    Var est = scale(sample_acc, d / probes);
    acc = acc + (clamp ? clamp_max(est, g_max) : est);
  }
  return scale(acc, 1.0 / static_cast<double>(batch.size()));
}

double jac_exact_value(const PolicyParams& params,
                       const std::vector<std::pair<Vector, Vector>>& batch,
                       double g_max) {
  double acc = 0.0;
  for (const auto& [obs, action] : batch)
    acc += std::min(input_grad_logprob(params, obs, action).squaredNorm(),
                    g_max);
  return acc / static_cast<double>(batch.size());
}

Var smooth_expr(Tape& tape, const PolicyVars& cur, const PolicyVars& ref,
                const std::vector<Vector>& states) {
  Var acc = tape.constant(0.0);
  for (const Vector& s : states) {
    Var obs = tape.constant(s);
    acc = acc + sum(square(cur.mean(obs) - ref.mean(obs)));
  }
  return scale(acc, 1.0 / static_cast<double>(states.size()));
}

}  // namespace

PenaltyResult jacobian_penalty(
    const PolicyParams& params,
    const std::vector<std::pair<Vector, Vector>>& batch, double g_max,
    JacobianMode mode, int probes, double probe_step, num::RngStream rng) {
  if (batch.empty())
    throw std::invalid_argument("jacobian_penalty: empty batch");
  if (probes < 1) throw std::invalid_argument("jacobian_penalty: probes < 1");
  if (!(probe_step > 0.0))
    throw std::invalid_argument("jacobian_penalty: probe step <= 0");
  if (!(g_max > 0.0))
    throw std::invalid_argument("jacobian_penalty: g_max <= 0");

  Tape tape;
  PolicyVars cur = PolicyVars::leaves(tape, params);
  const bool clamp = mode == JacobianMode::kFdHutchinson;
  Var expr = jac_fd_expr(tape, cur, batch, probes, probe_step, rng, clamp, g_max);

  PenaltyResult r;
  r.grad_path_value = expr.scalar();
  r.value = mode == JacobianMode::kFdHutchinson
                ? r.grad_path_value
                : jac_exact_value(params, batch, g_max);
  const auto leaves = cur.parameter_list();
  r.grads = PolicyGrads::from_list(params, tape.gradients(expr, leaves));
  return r;
}

PenaltyResult smooth_penalty(const PolicyParams& params,
                             const PolicyParams& ref_params,
                             const std::vector<Vector>& states) {
  check_same_architecture(params, ref_params);
  if (states.empty())
    throw std::invalid_argument("smooth_penalty: empty state batch");

  Tape tape;
  PolicyVars cur = PolicyVars::leaves(tape, params);
  PolicyVars ref = PolicyVars::constants(tape, ref_params);
  Var expr = smooth_expr(tape, cur, ref, states);

  PenaltyResult r;
  r.value = expr.scalar();
  r.grad_path_value = r.value;
  const auto leaves = cur.parameter_list();
  r.grads = PolicyGrads::from_list(params, tape.gradients(expr, leaves));
  return r;
}

LossBreakdown robust_loss(const PolicyParams& params,
                          const PolicyParams& ref_params,
                          const std::vector<MinibatchItem>& batch,
                          const LossConfig& config, num::RngStream rng) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("robust_loss: empty batch");

  Tape tape;
  PolicyVars cur = PolicyVars::leaves(tape, params);

  Var ppo = ppo_item_expr(tape, cur, batch[0], config.clip_low, config.clip_high);
  for (std::size_t i = 1; i < batch.size(); ++i)
    ppo = ppo +
          ppo_item_expr(tape, cur, batch[i], config.clip_low, config.clip_high);
  ppo = scale(ppo, 1.0 / static_cast<double>(batch.size()));
  Var total = ppo;

  LossBreakdown out;
  out.ppo = ppo.scalar();

  if (config.alpha != 0.0) {
    std::vector<std::pair<Vector, Vector>> samples;
    for (const MinibatchItem& item : batch)
      for (const auto& s : item.steps) samples.push_back(s);
    const bool clamp = config.jacobian_mode == JacobianMode::kFdHutchinson;
    Var jac = jac_fd_expr(tape, cur, samples, config.probes, config.probe_step,
                          rng, clamp, config.g_max);
    out.jac_grad_value = jac.scalar();
    out.jac = clamp ? out.jac_grad_value
                    : jac_exact_value(params, samples, config.g_max);
    total = total + scale(jac, config.alpha);
  }

  if (config.beta != 0.0) {
    check_same_architecture(params, ref_params);
    PolicyVars ref = PolicyVars::constants(tape, ref_params);
    std::vector<Vector> states;
    for (const MinibatchItem& item : batch)
      for (const auto& s : item.steps) states.push_back(s.first);
    Var sm = smooth_expr(tape, cur, ref, states);
    out.smooth = sm.scalar();
    total = total + scale(sm, config.beta);
  }

  out.total = out.ppo + config.alpha * out.jac + config.beta * out.smooth;
  out.grad_path_total =
      out.ppo + config.alpha * out.jac_grad_value + config.beta * out.smooth;

  const auto leaves = cur.parameter_list();
  out.grads = PolicyGrads::from_list(params, tape.gradients(total, leaves));
  out.grad_norm = out.grads.global_norm();
  out.grad_norm_mean_net = out.grads.mean_net_norm();
  out.grad_norm_log_std = out.grads.log_std.norm();
  return out;
}

}  // namespace rpt
