#include "epdkit/distort/catalog.hpp"

#include <string>

#include "epdkit/core/error.hpp"

namespace epd::distort {
namespace {

using C = Category;

// Level tables. Where the parameter shrinks with severity (quality factors,
// quantization levels, saturation factors) it is still strictly monotone.
constexpr std::array<KindInfo, kKindCount> kCatalog{{
    {Kind::gaussian_blur, "gaussian_blur", "Gaussian blur", C::blur, "sigma_px", {1, 2, 3, 4, 6}, 8, false, true},
    {Kind::lens_blur, "lens_blur", "Lens blur", C::blur, "disk_radius_px", {1, 2, 3, 4, 6}, 8, false, true},
    {Kind::motion_blur, "motion_blur", "Motion blur", C::blur, "length_px", {3, 5, 7, 9, 11}, 8, true, false},
    {Kind::color_diffusion, "color_diffusion", "Color diffusion", C::color, "chroma_sigma_px", {1, 3, 6, 8, 12}, 8,
     false, false},
    {Kind::color_shift, "color_shift", "Color shift", C::color, "offset_px", {1, 2, 4, 6, 8}, 8, false, false},
    {Kind::color_quantization, "color_quantization", "Color quantization", C::color, "levels_per_channel",
     {24, 12, 8, 5, 3}, 8, false, true},
    {Kind::hsv_saturation, "hsv_saturation", "HSV saturation", C::color, "saturation_factor",
     {0.7, 0.5, 0.3, 0.15, 0.0}, 8, false, false},
    {Kind::lab_saturation, "lab_saturation", "Lab saturation", C::color, "chroma_factor", {1.25, 1.5, 2, 2.5, 3}, 8,
     false, false},
    {Kind::jpeg2000, "jpeg2000", "JPEG2000 compression", C::compression, "quant_step",
     {0.02, 0.05, 0.1, 0.2, 0.4}, 8, false, true},
    {Kind::jpeg, "jpeg", "JPEG compression", C::compression, "quality", {43, 36, 24, 7, 2}, 8, false, true},
    {Kind::white_noise, "white_noise", "White noise", C::noise, "sigma", {0.02, 0.05, 0.09, 0.14, 0.20}, 8, true,
     true},
    {Kind::color_noise, "color_noise", "Color noise", C::noise, "sigma", {0.03, 0.06, 0.10, 0.15, 0.22}, 8, true,
     true},
    {Kind::impulse_noise, "impulse_noise", "Impulse noise", C::noise, "probability",
     {0.01, 0.03, 0.06, 0.10, 0.18}, 8, true, true},
    {Kind::multiplicative_noise, "multiplicative_noise", "Multiplicative noise", C::noise, "sigma",
     {0.05, 0.1, 0.2, 0.3, 0.45}, 8, true, true},
    {Kind::gaussian_denoise, "gaussian_denoise", "Gaussian Denoise", C::noise, "noise_sigma",
     {0.03, 0.06, 0.1, 0.15, 0.2}, 8, true, false},
    {Kind::brighten, "brighten", "Brighten", C::brightness, "gamma", {0.9, 0.8, 0.7, 0.55, 0.4}, 8, false, false},
    {Kind::darken, "darken", "Darken", C::brightness, "gamma",
     {1.0 / 0.9, 1.0 / 0.8, 1.0 / 0.7, 1.0 / 0.55, 1.0 / 0.4}, 8, false, true},
    {Kind::mean_shift, "mean_shift", "Mean shift", C::brightness, "offset", {0.05, 0.1, 0.15, 0.2, 0.25}, 8, false,
     false},
    {Kind::jitter, "jitter", "Jitter", C::spatial, "max_displacement_px", {1, 2, 3, 4, 5}, 8, true, false},
    {Kind::non_eccentricity_patch, "non_eccentricity_patch", "Non-eccentricity patch", C::spatial,
     "max_displacement_px", {2, 4, 6, 8, 10}, 16, true, false},
    {Kind::pixelate, "pixelate", "Pixelate", C::spatial, "block_px", {2, 3, 4, 8, 16}, 8, false, true},
    {Kind::quantization, "quantization", "Quantization", C::spatial, "luma_levels", {32, 16, 8, 6, 4}, 8, false,
     false},
    {Kind::color_block, "color_block", "Color block", C::spatial, "block_count", {1, 2, 3, 4, 5}, 8, true, false},
    {Kind::high_sharpen, "high_sharpen", "High sharpen", C::sharpness_contrast, "unsharp_amount", {1, 2, 3, 4, 5},
     8, false, false},
    {Kind::contrast_change, "contrast_change", "Contrast change", C::sharpness_contrast, "contrast_scale",
     {0.9, 0.75, 0.6, 0.45, 0.3}, 8, false, false},
}};

constexpr std::array<std::string_view, kCategoryCount> kCategoryLabels{
    "Blurs", "Color distortions", "Compression", "Noise", "Brightness change", "Spatial distortions",
    "Sharpness and contrast"};
constexpr std::array<std::string_view, kCategoryCount> kCategoryCodes{"D.1", "D.2", "D.3", "D.4",
                                                                       "D.5", "D.6", "D.7"};

}  // namespace

std::span<const KindInfo> list_kinds() { return kCatalog; }

const KindInfo& kind_info(Kind kind) {
  const int index = static_cast<int>(kind);
  if (index < 0 || index >= kKindCount) throw RangeError("unknown distortion kind index " + std::to_string(index));
  return kCatalog[index];
}

Kind parse_kind(std::string_view name) {
  for (const KindInfo& info : kCatalog)
    if (info.name == name) return info.kind;
  throw RangeError("unknown distortion kind '" + std::string(name) + "'");
}

std::string_view kind_name(Kind kind) { return kind_info(kind).name; }

std::string_view category_code(Category category) {
  const int index = static_cast<int>(category);
  if (index < 0 || index >= kCategoryCount) throw RangeError("unknown category");
  return kCategoryCodes[index];
}

std::string_view category_label(Category category) {
  const int index = static_cast<int>(category);
  if (index < 0 || index >= kCategoryCount) throw RangeError("unknown category");
  return kCategoryLabels[index];
}

LevelParams level_params(Kind kind, int level) {
  const KindInfo& info = kind_info(kind);
  if (level < 1 || level > kLevelCount)
    throw RangeError("level " + std::to_string(level) + " outside 1..5 for " + std::string(info.name));
  return {kind, level, info.parameter, info.levels[level - 1]};
}

}  // namespace epd::distort
