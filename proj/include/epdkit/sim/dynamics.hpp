#pragma once

#include <cstdint>

#include "epdkit/sim/perception.hpp"
#include "epdkit/sim/scene.hpp"

namespace epd::sim {

struct SimParams {
  double a_max = 0.05;         // largest gripper displacement per step
  double sigma_min = 0.005;    // action noise at full perception confidence
  double sigma_max = 0.05;     // action noise at zero confidence
  double capture_radius = 0.04;
  double tau_c = 0.25;         // segmentation threshold
};

// Contact geometry of the push task, in workspace units.
inline constexpr double kObjectRadius = 0.047;
inline constexpr double kGripperRadius = 0.02;
inline constexpr double kGoalTolerance = 0.02;  // push bonus radius
// Pick proxy: lifting raises the held object this much per step up to kLiftHeight.
inline constexpr double kLiftRate = 0.02;
inline constexpr double kLiftHeight = 0.2;

struct State {
  Scene scene;
  bool held = false;
  double height = 0.0;
};

// Pick actions use the grip flag; push ignores it.
struct Action {
  double dx = 0.0;
  double dy = 0.0;
  bool grip = false;
};

struct StepOutcome {
  double reward = 0.0;
  double distance = 0.0;  // D_t after the step
  bool clipped = false;   // the action exceeded a_max and was scaled down
  bool grasped = false;   // a grasp happened on this step
};

// D for the task: object to goal (push), or gripper to object plus the lift
// height before a grasp and the remaining lift height after it (pick).
double task_distance(const State& state, Task task);

// Kinematic update and immediate reward 10 * (D_{t-1} - D_t) + bonus.
StepOutcome step(State& state, Task task, Action action, const SimParams& params);

struct PolicyOutput {
  Action action;
  double sigma = 0.0;
  double entropy = 0.0;  // differential entropy of the Gaussian action noise
};

// Noise scale for a perception confidence in [0, 1].
double action_sigma(double confidence, const SimParams& params);
// 0.5 * k * ln(2 pi e sigma^2) for a k-dimensional isotropic Gaussian.
double gaussian_entropy(int dims, double sigma);
int action_dims(Task task);

// Proportional controller toward a perceived target plus Gaussian noise drawn
// from `seed`. Push approaches a point behind the object (detouring around it
// when needed) and then drives through toward the goal; pick moves onto the
// object, closes the gripper and holds still while lifting. The gripper's own
// position comes from the state (proprioception), targets from `estimate`.
PolicyOutput scripted_policy(const Estimate& estimate, const State& state, Task task, const SimParams& params,
                             std::uint64_t seed);

}  // namespace epd::sim
