#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "epdkit/core/image.hpp"
#include "epdkit/distort/catalog.hpp"

namespace epd::distort {

// Pure function of (image, spec). Stochastic kinds draw only from an Rng
// seeded with spec.seed. Throws RangeError for a bad kind or level and
// DimensionError when the image is smaller than the kind's minimum support.
ImageBuf apply_distortion(const ImageBuf& image, const DistortionSpec& spec);

// Seed used for frame `index` of an episode: seed XOR splitmix64(index).
std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Applies one spec to every frame, re-seeding frame i with frame_seed(spec.seed, i).
std::vector<ImageBuf> distort_batch(std::span<const ImageBuf> images, const DistortionSpec& spec);

}  // namespace epd::distort
