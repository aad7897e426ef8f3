#pragma once

#include <array>

#include "epdkit/core/image.hpp"

namespace epd::distort {

using Triple = std::array<double, 3>;

// HSV with hue in [0, 1) (fraction of a turn), saturation and value in [0, 1].
Triple rgb_to_hsv(const Triple& rgb);
Triple hsv_to_rgb(const Triple& hsv);

// CIELAB under D65, treating RGB as sRGB-encoded. The reference white is the
// sRGB matrix applied to (1, 1, 1), so neutral grays have exactly zero chroma.
Triple rgb_to_lab(const Triple& rgb);
Triple lab_to_rgb(const Triple& lab);

// Whole-image conversions. The Lab image holds unclamped L, a, b per pixel.
ImageBuf image_to_lab(const ImageBuf& rgb);
ImageBuf image_from_lab(const ImageBuf& lab);

// Rec. 601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace epd::distort
