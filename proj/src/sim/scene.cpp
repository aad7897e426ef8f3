#include "epdkit/sim/scene.hpp"

#include <string>

#include "epdkit/core/error.hpp"
#include "epdkit/core/rng.hpp"

namespace epd::sim {
namespace {

Rgb random_color(Rng& rng) {
  return {static_cast<float>(rng.uniform(0.1, 0.9)), static_cast<float>(rng.uniform(0.1, 0.9)),
          static_cast<float>(rng.uniform(0.1, 0.9))};
}

bool in_workspace(Vec2 p) { return p.x >= kMinCoord && p.x <= kMaxCoord && p.y >= kMinCoord && p.y <= kMaxCoord; }

bool in_goal(double px, double py, Vec2 centre) {
  const double dx = px - to_pixels(centre.x), dy = py - to_pixels(centre.y);
  return dx * dx + dy * dy <= kGoalRadiusPx * kGoalRadiusPx;
}

bool in_object(double px, double py, Vec2 centre) {
  const double half = kObjectSidePx / 2;
  const double dx = px - to_pixels(centre.x), dy = py - to_pixels(centre.y);
  return dx >= -half && dx < half && dy >= -half && dy < half;
}

bool in_gripper(double px, double py, Vec2 centre) {
  const double dx = px - to_pixels(centre.x), dy = py - to_pixels(centre.y);
  return (std::abs(dy) < 0.5 && std::abs(dx) <= kGripperArmPx) || (std::abs(dx) < 0.5 && std::abs(dy) <= kGripperArmPx);
}

}  // namespace

std::string_view task_name(Task task) { return task == Task::push ? "push" : "pick"; }

Task parse_task(std::string_view name) {
  if (name == "push") return Task::push;
  if (name == "pick") return Task::pick;
  throw RangeError("unknown task '" + std::string(name) + "' (expected push or pick)");
}

double color_distance(const Rgb& a, const Rgb& b) {
  double sq = 0.0;
  for (int c = 0; c < 3; ++c) sq += (static_cast<double>(a[c]) - b[c]) * (static_cast<double>(a[c]) - b[c]);
  return std::sqrt(sq);
}

Scene make_scene(std::uint64_t scene_seed) {
  Rng rng(scene_seed);
  Scene s;
  s.scene_seed = scene_seed;
  for (;;) {
    s.table_background = random_color(rng);
    s.object_color = random_color(rng);
    s.goal_color = random_color(rng);
    const Rgb* colors[] = {&s.table_background, &s.object_color, &s.goal_color, &kGripperColor};
    bool separated = true;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) separated = separated && color_distance(*colors[i], *colors[j]) >= kMinColorSeparation;
    if (separated) break;
  }
  for (;;) {
    s.object_pos = {rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75)};
    const double angle = rng.uniform(0.0, 2 * M_PI);
    const double dist = rng.uniform(0.3, 0.4);
    s.goal_pos = s.object_pos + Vec2{std::cos(angle), std::sin(angle)} * dist;
    if (s.goal_pos.x < 0.1 || s.goal_pos.x > 0.9 || s.goal_pos.y < 0.1 || s.goal_pos.y > 0.9) continue;
    s.gripper_pos = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    if ((s.gripper_pos - s.object_pos).norm() < 0.15 || (s.gripper_pos - s.goal_pos).norm() < 0.15) continue;
    break;
  }
  return s;
}

void check_scene(const Scene& s) {
  if (!in_workspace(s.object_pos)) throw RangeError("object position outside [0.05, 0.95]^2");
  if (!in_workspace(s.goal_pos)) throw RangeError("goal position outside [0.05, 0.95]^2");
  if (!in_workspace(s.gripper_pos)) throw RangeError("gripper position outside [0.05, 0.95]^2");
  if (color_distance(s.object_color, s.goal_color) < kMinColorSeparation)
    throw RangeError("object and goal colors are closer than 0.3");
}

ImageBuf render_observation(const Scene& scene, Task /*task*/) {
  ImageBuf img(kImageSize, kImageSize);
  for (int y = 0; y < kImageSize; ++y)
    for (int x = 0; x < kImageSize; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const Rgb* color = &scene.table_background;
      if (in_goal(px, py, scene.goal_pos)) color = &scene.goal_color;
      if (in_object(px, py, scene.object_pos)) color = &scene.object_color;
      if (in_gripper(px, py, scene.gripper_pos)) color = &kGripperColor;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = (*color)[c];
    }
  return img;
}

double goal_footprint() {
  double count = 0;
  for (int y = -10; y < 10; ++y)
    for (int x = -10; x < 10; ++x) count += in_goal(x + 0.5, y + 0.5, Vec2{0.0, 0.0});
  return count;
}

double object_footprint() { return kObjectSidePx * kObjectSidePx; }

}  // namespace epd::sim
