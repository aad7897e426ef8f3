#pragma once

#include "epdkit/core/image.hpp"

namespace epd::metrics {

// Peak signal-to-noise ratio in dB with peak 1.0, over all three channels.
// Identical images give +infinity. Throws DimensionError on shape mismatch.
double psnr(const ImageBuf& ref, const ImageBuf& dist);

// Single-scale SSIM on Rec. 601 luma: 11x11 Gaussian window (sigma 1.5) over
// the valid region, C1 = 1e-4, C2 = 9e-4. Throws DimensionError on shape
// mismatch or when a side is shorter than the window.
double ssim(const ImageBuf& ref, const ImageBuf& dist);

}  // namespace epd::metrics
