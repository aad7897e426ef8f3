#include "epdkit/sim/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "epdkit/core/rng.hpp"

namespace epd::sim {
namespace {

constexpr double kContact = kObjectRadius + kGripperRadius;
constexpr double kApproachMargin = 0.015;  // behind-point clearance before a push
constexpr double kDetourMargin = 0.03;
constexpr double kLineTolerance = 0.03;   // lateral slack while pushing

Vec2 clamp_to(Vec2 p, double lo, double hi) { return {std::clamp(p.x, lo, hi), std::clamp(p.y, lo, hi)}; }

Vec2 limit(Vec2 v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? v * (max_norm / n) : v;
}

// Distance from c to the segment a-b.
double segment_distance(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a;
  const double len_sq = ab.dot(ab);
  const double t = len_sq > 0 ? std::clamp((c - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
  return (a + ab * t - c).norm();
}

Vec2 push_target(const Estimate& est, Vec2 g) {
  const Vec2 o = est.object;
  const Vec2 to_goal = est.goal - o;
  const double dist = to_goal.norm();
  if (dist < kGoalTolerance / 2) return g;
  const Vec2 u = to_goal * (1.0 / dist);
  const Vec2 rel = g - o;
  const double along = rel.dot(u);
  const Vec2 perp = rel - u * along;

  // Behind the object and close to the line: head for the contact point one
  // step further along, which also pulls the gripper back onto the line.
  if (along < -0.8 * kContact && perp.norm() < kLineTolerance) return o + u * (std::min(dist, 0.05) - kContact);

  const Vec2 behind = o - u * (kContact + kApproachMargin);
  if (segment_distance(g, behind, o) >= kContact + 0.005) return behind;
  // The straight path would bump the object: go around on the gripper's side.
  Vec2 side = perp.norm() > 1e-9 ? perp * (1.0 / perp.norm()) : Vec2{-u.y, u.x};
  return o + side * (kContact + kDetourMargin) - u * (0.5 * kContact);
}

}  // namespace

double task_distance(const State& s, Task task) {
  if (task == Task::push) return (s.scene.object_pos - s.scene.goal_pos).norm();
  if (s.held) return kLiftHeight - s.height;
  return (s.scene.gripper_pos - s.scene.object_pos).norm() + kLiftHeight;
}

StepOutcome step(State& s, Task task, Action action, const SimParams& params) {
  StepOutcome out;
  Vec2 move{action.dx, action.dy};
  if (move.norm() > params.a_max) {
    move = move * (params.a_max / move.norm());
    out.clipped = true;
  }
  const double before = task_distance(s, task);
  Scene& sc = s.scene;
  sc.gripper_pos = clamp_to(sc.gripper_pos + move, 0.0, 1.0);

  double bonus = 0.0;
  if (task == Task::push) {
    const Vec2 rel = sc.object_pos - sc.gripper_pos;
    const double d = rel.norm();
    if (d < kContact) {
      const Vec2 dir = d > 1e-12 ? rel * (1.0 / d) : (move.norm() > 0 ? move * (1.0 / move.norm()) : Vec2{1.0, 0.0});
      sc.object_pos = clamp_to(sc.gripper_pos + dir * kContact, kMinCoord, kMaxCoord);
    }
  } else if (s.held) {
    if (action.grip) {
      sc.object_pos = sc.gripper_pos;
      s.height += kLiftRate;
      // Snap so repeated increments that land a rounding error short still count as lifted.
      if (s.height > kLiftHeight - 1e-9) s.height = kLiftHeight;
    } else {
      s.held = false;
      s.height = 0.0;
    }
  } else if (action.grip && (sc.gripper_pos - sc.object_pos).norm() <= params.capture_radius) {
    s.held = true;
    out.grasped = true;
    bonus += 1.0;
  }

  out.distance = task_distance(s, task);
  if (task == Task::push && out.distance < kGoalTolerance) bonus += 1.0;
  if (task == Task::pick && s.held && s.height >= kLiftHeight) bonus += 1.0;
  out.reward = 10.0 * (before - out.distance) + bonus;
  return out;
}

double action_sigma(double confidence, const SimParams& p) {
  return p.sigma_min + (p.sigma_max - p.sigma_min) * (1.0 - std::clamp(confidence, 0.0, 1.0));
}

double gaussian_entropy(int dims, double sigma) {
  return 0.5 * dims * std::log(2.0 * M_PI * M_E * sigma * sigma);
}

int action_dims(Task task) { return task == Task::push ? 2 : 3; }

PolicyOutput scripted_policy(const Estimate& est, const State& s, Task task, const SimParams& params,
                             std::uint64_t seed) {
  const Vec2 g = s.scene.gripper_pos;
  Vec2 move;
  bool grip = false;
  if (task == Task::push) {
    move = push_target(est, g) - g;
  } else if (s.held) {
    grip = true;
  } else {
    move = est.object - g;
    grip = move.norm() <= 0.5 * params.capture_radius;
  }
  move = limit(move, params.a_max);

  PolicyOutput out;
  out.sigma = action_sigma(est.object_confidence, params);
  out.entropy = gaussian_entropy(action_dims(task), out.sigma);
  Rng rng(seed);
  const auto noise = rng.normal_pair();
  out.action.dx = move.x + out.sigma * noise[0];
  out.action.dy = move.y + out.sigma * noise[1];
  out.action.grip = task == Task::pick && (grip ? 1.0 : 0.0) + out.sigma * rng.normal() > 0.5;
  return out;
}

}  // namespace epd::sim
