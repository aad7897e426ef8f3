#pragma once

#include <span>

#include "epdkit/sim/dynamics.hpp"

namespace epd::sim {

struct RewardParams {
  double gamma = 0.99;  // discount
  double alpha = 0.1;   // entropy weight
  double lambda = 0.5;  // inverse-distance weight
  double eps_d = 0.01;  // distance floor for the inverse-distance term
};

// Throws RangeError for gamma outside (0, 1], negative weights, a
// non-positive eps_d or any non-finite value.
void validate(const RewardParams& params);

struct StepRecord {
  int t = 0;
  Vec2 gripper;  // state after the step
  Vec2 object;
  bool held = false;
  double height = 0.0;
  Action action;  // as executed, after clipping
  bool clipped = false;
  double confidence = 0.0;  // perception confidence the policy acted on
  double reward = 0.0;
  double entropy = 0.0;
  double distance = 0.0;
};

// The aggregators accept any non-empty trace whose steps are numbered 0..n-1
// in order and throw RangeError otherwise.

// Undiscounted return: sum of r_t.
double aggregate_ppo(std::span<const StepRecord> trace);
// Entropy-regularised discounted return: sum of gamma^t (r_t + alpha H_t).
double aggregate_sac(std::span<const StepRecord> trace, const RewardParams& params);
// sum of r_t + lambda / max(D_t, eps_d).
double aggregate_tdmpc2(std::span<const StepRecord> trace, const RewardParams& params);

}  // namespace epd::sim
