#include "rpt/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace rpt {

void ProgressTracker::start(double d0, double radius, int milestone_count) {
  if (milestone_count < 1)
    throw std::invalid_argument("progress: milestone count must be >= 1");
  initial_distance = d0;
  best_distance = d0;
  success_radius = radius;
  milestones = milestone_count;
}

void ProgressTracker::update(double distance) {
  best_distance = std::min(best_distance, distance);
}

double ProgressTracker::fraction() const {
  if (initial_distance <= success_radius) return 1.0;
  int crossed = 0;
  for (int k = 1; k <= milestones; ++k) {
    const double threshold =
        success_radius + (initial_distance - success_radius) *
                             static_cast<double>(milestones - k) / milestones;
    if (best_distance <= threshold) ++crossed;
  }
  return static_cast<double>(crossed) / milestones;
}

RewardTerms dense_reward(const Vector& prev_state, const Vector& state,
                         const Vector& prev_action,
                         const Vector& prev_prev_action, const Vector& action,
                         const Vector& goal, double progress_fraction,
                         bool success, const RewardConfig& config) {
  (void)prev_state;
  if (state.size() != goal.size())
    throw std::invalid_argument("dense_reward: state/goal dim mismatch");
  if (action.size() != prev_action.size() ||
      action.size() != prev_prev_action.size())
    throw std::invalid_argument("dense_reward: action history dim mismatch");

  RewardTerms t;
  const double mse =
      (state - goal).squaredNorm() / static_cast<double>(state.size());
  t.proximity = std::exp(-mse);
  t.progress = progress_fraction;
  t.velocity = -(action - prev_action).squaredNorm();
  t.acceleration =
      -(prev_prev_action - 2.0 * prev_action + action).squaredNorm();
  t.success = success ? 1.0 : 0.0;
  t.total = config.w_proximity * t.proximity + config.w_progress * t.progress +
            config.w_velocity * t.velocity +
            config.w_acceleration * t.acceleration +
            config.w_success * t.success;
  return t;
}

}  // namespace rpt
