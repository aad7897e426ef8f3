#pragma once

#include <span>
#include <vector>

#include "epdkit/core/image.hpp"

namespace epd::distort {

// Mirror reflection without repeating the edge sample (... 2 1 | 0 1 2 ... n-1 | n-2 ...).
// Folds repeatedly, so any integer maps into [0, n).
int reflect_index(int i, int n) noexcept;

// Normalized 1-D Gaussian taps with radius ceil(3 sigma).
std::vector<float> gaussian_kernel(double sigma);

// Applies a symmetric odd-length kernel along rows then columns. `channel_mask`
// bit c selects which channels are filtered; unselected channels are copied.
ImageBuf convolve_separable(const ImageBuf& image, std::span<const float> kernel, unsigned channel_mask = 0b111);

ImageBuf gaussian_blur(const ImageBuf& image, double sigma, unsigned channel_mask = 0b111);

// Uniform average over the integer offsets with dy^2 + dx^2 <= radius^2.
ImageBuf disk_blur(const ImageBuf& image, int radius);

// Average of `length` bilinear samples spaced one pixel apart along a line
// through each pixel at `angle` radians.
ImageBuf motion_blur(const ImageBuf& image, int length, double angle);

// Bilinear sample at continuous pixel coordinates with mirrored borders.
float sample_bilinear(const ImageBuf& image, double y, double x, int c) noexcept;

}  // namespace epd::distort
