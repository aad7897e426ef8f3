#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "epdkit/core/image.hpp"

namespace epd::sim {

enum class Task { push, pick };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);  // RangeError on unknown names

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

using Rgb = std::array<float, 3>;

// Observations are square renders; one unit of the workspace spans the image.
inline constexpr int kImageSize = 128;
inline constexpr double kGoalRadiusPx = 8.0;
inline constexpr double kObjectSidePx = 12.0;
inline constexpr double kGripperArmPx = 4.0;  // cross spans 8 px
inline constexpr Rgb kGripperColor{0.05f, 0.05f, 0.05f};

inline constexpr double kMinCoord = 0.05;
inline constexpr double kMaxCoord = 0.95;
inline constexpr double kMinColorSeparation = 0.3;

struct Scene {
  Vec2 object_pos;
  Vec2 goal_pos;
  Vec2 gripper_pos;
  Rgb object_color{};
  Rgb goal_color{};
  Rgb table_background{};
  std::uint64_t scene_seed = 0;

  friend bool operator==(const Scene&, const Scene&) = default;
};

double color_distance(const Rgb& a, const Rgb& b);

// Samples a scene from its seed. Object and goal start 0.3 to 0.4 apart and
// the gripper starts clear of both, so every task is solvable in one episode.
Scene make_scene(std::uint64_t scene_seed);

// Throws RangeError naming the first violated scene invariant.
void check_scene(const Scene& scene);

// Unit coordinate -> continuous pixel coordinate (pixel i covers [i, i+1)).
inline double to_pixels(double u) { return u * kImageSize; }

// Background, goal disc, object square, gripper cross, in that order, with
// hard edges. The task does not change the drawing; it is accepted so
// task-specific markers can be added without touching callers.
ImageBuf render_observation(const Scene& scene, Task task);

// Pixel counts of the goal disc and object square when fully visible.
double goal_footprint();
double object_footprint();

}  // namespace epd::sim
