#include "epdkit/sim/perception.hpp"

#include <algorithm>

#include "epdkit/core/error.hpp"

namespace epd::sim {
namespace {

struct Mask {
  double count = 0, sum_x = 0, sum_y = 0;
};

void resolve(const Mask& m, double footprint, Vec2 fallback, Vec2& pos, double& confidence) {
  if (m.count == 0) {
    pos = fallback;
    confidence = 0.0;
    return;
  }
  pos = {m.sum_x / m.count / kImageSize, m.sum_y / m.count / kImageSize};
  confidence = std::min(1.0, m.count / footprint);
}

}  // namespace

Estimate perceive(const ImageBuf& obs, const SceneColors& colors, double tau_c, const Estimate* previous) {
  if (obs.height() != kImageSize || obs.width() != kImageSize)
    throw DimensionError("perception expects " + std::to_string(kImageSize) + "x" + std::to_string(kImageSize) +
                         " observations");
  const double tau_sq = tau_c * tau_c;
  Mask object, goal;
  for (int y = 0; y < kImageSize; ++y)
    for (int x = 0; x < kImageSize; ++x) {
      double d_obj = 0, d_goal = 0;
      for (int c = 0; c < 3; ++c) {
        const double v = obs.at(y, x, c);
        d_obj += (v - colors.object[c]) * (v - colors.object[c]);
        d_goal += (v - colors.goal[c]) * (v - colors.goal[c]);
      }
      Mask* m = d_obj <= tau_sq ? &object : d_goal <= tau_sq ? &goal : nullptr;
      if (!m) continue;
      m->count += 1;
      m->sum_x += x + 0.5;
      m->sum_y += y + 0.5;
    }

  const Vec2 centre{0.5, 0.5};
  Estimate out;
  resolve(object, object_footprint(), previous ? previous->object : centre, out.object, out.object_confidence);
  resolve(goal, goal_footprint(), previous ? previous->goal : centre, out.goal, out.goal_confidence);
  return out;
}

}  // namespace epd::sim
