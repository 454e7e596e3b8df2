#pragma once

#include "rpt/types.hpp"

namespace rpt {

// Dense reward weights: 0.01 on the shaping terms, 0.001 on the action
// smoothness penalties, and 1 on task success.
struct RewardConfig {
  double w_proximity = 0.01;
  double w_progress = 0.01;
  double w_velocity = 0.001;
  double w_acceleration = 0.001;
  double w_success = 1.0;
  int milestones = 10;
};

struct RewardTerms {
  double proximity = 0.0;     // exp(-MSE(state, goal))
  double progress = 0.0;      // fraction of distance milestones crossed
  double velocity = 0.0;      // -|a_t - a_{t-1}|^2
  double acceleration = 0.0;  // -|a_{t-2} - 2 a_{t-1} + a_t|^2
  double success = 0.0;       // 0/1 task success
  double total = 0.0;         // exact weighted sum of the above
};

// Tracks distance milestones between the initial distance and the success
// radius; the crossed fraction is non-decreasing along a trajectory.
struct ProgressTracker {
  double initial_distance = 0.0;
  double best_distance = 0.0;
  double success_radius = 0.0;
  int milestones = 1;

  void start(double d0, double radius, int milestone_count);
  void update(double distance);
  double fraction() const;
};

RewardTerms dense_reward(const Vector& prev_state, const Vector& state,
                         const Vector& prev_action,
                         const Vector& prev_prev_action, const Vector& action,
                         const Vector& goal, double progress_fraction,
                         bool success, const RewardConfig& config);

}  // namespace rpt
