#pragma once

#include "epdkit/sim/scene.hpp"

namespace epd::sim {

struct SceneColors {
  Rgb object{};
  Rgb goal{};

  static SceneColors of(const Scene& scene) { return {scene.object_color, scene.goal_color}; }
};

struct Estimate {
  Vec2 object;
  Vec2 goal;
  double object_confidence = 0.0;  // matched pixels / nominal footprint, capped at 1
  double goal_confidence = 0.0;
};

// Color segmentation (RGB L2 distance <= tau_c) followed by a pixel-mass
// centroid per target. A target with an empty mask keeps its position from
// `previous`, or the image centre when there is none, with confidence 0.
Estimate perceive(const ImageBuf& observation, const SceneColors& colors, double tau_c,
                  const Estimate* previous = nullptr);

}  // namespace epd::sim
