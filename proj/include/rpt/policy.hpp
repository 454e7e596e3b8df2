#pragma once

#include <filesystem>
#include <vector>

#include "rpt/rng.hpp"
#include "rpt/tape.hpp"
#include "rpt/types.hpp"

namespace rpt {

// Diagonal-Gaussian MLP policy: tanh hidden layers, linear output mean, and
// one state-independent log-std per action dimension. Parameter snapshots
// are plain values; updates produce new snapshots.
struct PolicyParams {
  std::vector<Matrix> weights;  // layer l: (out x in)
  std::vector<Vector> biases;
  Vector log_std;

  Eigen::Index input_dim() const { return weights.front().cols(); }
  Eigen::Index action_dim() const { return weights.back().rows(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  bool is_linear() const { return weights.size() == 1; }
  Vector std() const { return log_std.array().exp().matrix(); }

  void validate() const;  // layer shapes compose, log_std finite, d_a >= 1

  static PolicyParams init_mlp(Eigen::Index obs_dim,
                               const std::vector<int>& hidden,
                               Eigen::Index action_dim, double init_log_std,
                               num::RngStream& rng);
};

// Compact per-dimension observation box; the domain over which sup-norm
// policy gaps are taken.
struct StateBox {
  Vector lower;
  Vector upper;

  StateBox() = default;
  StateBox(Vector lo, Vector hi);
  static StateBox symmetric(Eigen::Index dim, double half_width);

  Eigen::Index dim() const { return lower.size(); }
  bool degenerate() const;
  Vector sample(num::RngStream& rng) const;
  Vector clip(const Vector& v) const;
};

Vector mean_action(const PolicyParams& params, const Vector& obs);
double log_prob(const PolicyParams& params, const Vector& obs,
                const Vector& action);
Vector sample_action(const PolicyParams& params, const Vector& obs,
                     num::RngStream& rng);
double kl_divergence(const PolicyParams& p, const PolicyParams& q,
                     const Vector& obs);

// Exact gradient of log pi(a|s) with respect to the observation.
Vector input_grad_logprob(const PolicyParams& params, const Vector& obs,
                          const Vector& action);

// Analytic Jacobian d mu / d obs of the mean network (action_dim x obs_dim).
Matrix mean_jacobian(const PolicyParams& params, const Vector& obs);

// Bound lambda on the mean-network Jacobian spectral norm. Exact for a
// single linear layer; otherwise the max over n uniform samples in the box
// (a lower bound on the true sup). A degenerate box evaluates at its point.
double estimate_lambda(const PolicyParams& params, const StateBox& box, int n,
                       num::RngStream& rng);

// Versioned checkpoint: one "RPTCKPT v1" header line, then per-parameter
// entries of (name, shape, little-endian 64-bit floats). Bit-exact.
void save_checkpoint(const PolicyParams& params,
                     const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

// Policy parameters bound onto a tape, either as differentiable leaves
// (for d/d theta) or as constants (reference / sampling snapshots).
struct PolicyVars {
  std::vector<num::Var> weights;
  std::vector<num::Var> biases;
  num::Var log_std;

  static PolicyVars leaves(num::Tape& tape, const PolicyParams& params);
  static PolicyVars constants(num::Tape& tape, const PolicyParams& params);

  num::Var mean(num::Var obs) const;
  num::Var log_prob(num::Var obs, num::Var action) const;
  std::vector<num::Var> parameter_list() const;  // w0, b0, ..., log_std
};

}  // namespace rpt
