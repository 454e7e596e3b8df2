#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "rpt/rewards.hpp"
#include "rpt/rng.hpp"
#include "rpt/types.hpp"

namespace rpt {

// Deterministic episode identity: (root seed, context id) fixes the initial
// state and goal through a labeled RNG stream.
struct ContextSeed {
  std::uint64_t seed = 0;
  std::uint64_t id = 0;

  num::RngStream stream() const {
    return num::RngStream(seed, {"context"}).child(id);
  }
};

enum class ObsChannel {
  kNone,
  kVectorBall,
  kShift,
  kRotation,
  kColor,
  kOcclusion,
  kErasing,
  kMixed,
};

ObsChannel parse_channel(const std::string& name);
std::string channel_name(ObsChannel channel);

struct PerturbationSpec {
  ObsChannel channel = ObsChannel::kNone;
  double obs_level = 0.0;     // epsilon_obs in [0, 1]
  double action_sigma = 0.0;  // Gaussian execution noise std
  double p_clean = 0.0;       // probability of delivering the clean obs

  void validate() const;
};

struct StepResult {
  Vector observation;  // next clean observation
  Vector state;        // true state after the transition
  RewardTerms reward;
  bool success = false;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual Vector reset(const ContextSeed& context) = 0;
  virtual StepResult step(const Vector& action) = 0;
  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::Index action_dim() const = 0;
  virtual int horizon() const = 0;
  virtual bool episode_done() const = 0;
  // Side length G when observations are flattened G x G images, else 0.
  virtual int image_side() const { return 0; }
};

// Linear dynamics s' = clip(A s + B a) with reward -c(|s - g| + kappa |a|).
// Exposes the exact constants L_f = max(|A|_2, |B|_2) and
// L_r = c * max(1, kappa) the robustness bounds need.
struct LinearEnvConfig {
  Matrix a;
  Matrix b;
  Vector goal;
  double reward_scale = 1.0;   // c > 0
  double action_cost = 0.0;    // kappa >= 0
  double success_radius = 0.1;
  int horizon = 20;
  double state_clip = 10.0;    // states clipped to [-clip, clip]^d
  Vector start_lower;
  Vector start_upper;
  RewardConfig rewards;
};

class LinearLipschitzEnv : public Env {
 public:
  explicit LinearLipschitzEnv(LinearEnvConfig config);

  Vector reset(const ContextSeed& context) override;
  StepResult step(const Vector& action) override;
  Eigen::Index obs_dim() const override { return config_.a.rows(); }
  Eigen::Index action_dim() const override { return config_.b.cols(); }
  int horizon() const override { return config_.horizon; }
  bool episode_done() const override { return done_; }

  double lipschitz_f() const { return lipschitz_f_; }
  double lipschitz_r() const { return lipschitz_r_; }
  const Vector& goal() const { return config_.goal; }
  const LinearEnvConfig& config() const { return config_; }

  // Dynamics and the Lipschitz reward, usable outside episode state for
  // paired-rollout analysis.
  Vector transition(const Vector& s, const Vector& a) const;
  double lipschitz_reward(const Vector& s, const Vector& a) const;
  Vector sample_start(const ContextSeed& context) const;

 private:
  LinearEnvConfig config_;
  double lipschitz_f_ = 0.0;
  double lipschitz_r_ = 0.0;
  Vector state_;
  int t_ = 0;
  bool done_ = true;
  ProgressTracker progress_;
  Vector prev_action_;
  Vector prev_prev_action_;
};

// Point mass on [0,1]^2 observed through a rendered grayscale image: agent
// blob (peak 1.0) plus goal marker blob (peak 0.5). The carrier for the
// image perturbation operators.
struct PointGoalImageEnvConfig {
  int image_side = 32;
  double blob_width = 1.5;  // Gaussian blob std in pixels
  double step_gain = 0.25;
  int horizon = 16;
  double success_radius = 0.2;
  double start_margin = 0.15;  // positions drawn in [margin, 1-margin]^2
  RewardConfig rewards;
};

class PointGoalImageEnv : public Env {
 public:
  explicit PointGoalImageEnv(PointGoalImageEnvConfig config);

  Vector reset(const ContextSeed& context) override;
  StepResult step(const Vector& action) override;
  Eigen::Index obs_dim() const override {
    return static_cast<Eigen::Index>(config_.image_side) * config_.image_side;
  }
  Eigen::Index action_dim() const override { return 2; }
  int horizon() const override { return config_.horizon; }
  bool episode_done() const override { return done_; }
  int image_side() const override { return config_.image_side; }

  const Vector& position() const { return position_; }
  const Vector& goal() const { return goal_; }
  const PointGoalImageEnvConfig& config() const { return config_; }

 private:
  Vector render_observation() const;

  PointGoalImageEnvConfig config_;
  Vector position_{2};
  Vector goal_{2};
  int t_ = 0;
  bool done_ = true;
  ProgressTracker progress_;
  Vector prev_action_;
  Vector prev_prev_action_;
};

// G x G grayscale render; position and goal live in [0,1]^2.
Matrix render_image(const Vector& position, const Vector& goal, int side,
                    double blob_width = 1.5);

// Applies the configured observation corruption. Column vectors take the
// exact-radius sphere perturbation; square images (side > 1) take the image
// channels. Level 0 and the p_clean branch return the input unchanged.
Matrix perturb_observation(const Matrix& obs, const PerturbationSpec& spec,
                           num::RngStream& rng);

// a + xi with xi ~ N(0, sigma^2 I).
Vector perturb_action(const Vector& action, double sigma, num::RngStream& rng);

// Row-major flatten / unflatten between image matrices and observations.
Vector flatten_image(const Matrix& image);
Matrix unflatten_image(const Vector& obs, int side);

// Binary PGM (P5, maxval 255).
void write_pgm(const Matrix& image, const std::filesystem::path& path);

}  // namespace rpt
