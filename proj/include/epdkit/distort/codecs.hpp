#pragma once

#include "epdkit/core/image.hpp"

namespace epd::distort {

// Lossy round trips that reproduce codec artifacts without producing a
// bitstream.

// Baseline-JPEG style: full-range YCbCr, 8x8 DCT per channel without chroma
// subsampling, quantization with the standard luminance/chrominance tables
// scaled by the IJG quality rule (quality in 1..100). Edge blocks are padded by
// mirroring.
ImageBuf jpeg_roundtrip(const ImageBuf& image, int quality);

// Two-level separable CDF 5/3 wavelet per RGB channel with dead-zone uniform
// quantization: step for detail bands, step / 8 for the coarsest approximation.
ImageBuf jpeg2000_roundtrip(const ImageBuf& image, double step);

}  // namespace epd::distort
