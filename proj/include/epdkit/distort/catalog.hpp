#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace epd::distort {

// The 25 distortion kinds, in catalog order. The numeric value is the catalog
// index and is stable.
enum class Kind : int {
  gaussian_blur,
  lens_blur,
  motion_blur,
  color_diffusion,
  color_shift,
  color_quantization,
  hsv_saturation,
  lab_saturation,
  jpeg2000,
  jpeg,
  white_noise,
  color_noise,
  impulse_noise,
  multiplicative_noise,
  gaussian_denoise,
  brighten,
  darken,
  mean_shift,
  jitter,
  non_eccentricity_patch,
  pixelate,
  quantization,
  color_block,
  high_sharpen,
  contrast_change,
};

inline constexpr int kKindCount = 25;
inline constexpr int kLevelCount = 5;

enum class Category : int { blur, color, compression, noise, brightness, spatial, sharpness_contrast };

inline constexpr int kCategoryCount = 7;

struct KindInfo {
  Kind kind;
  std::string_view name;       // snake_case token used on the CLI and in file names
  std::string_view label;      // human-readable row label
  Category category;
  std::string_view parameter;  // what the level table controls
  std::array<double, kLevelCount> levels;
  int min_support;             // smallest accepted image side in pixels
  bool stochastic;
  bool monotone;               // mean PSNR is non-increasing in level
};

struct LevelParams {
  Kind kind;
  int level;
  std::string_view parameter;
  double value;

  friend bool operator==(const LevelParams&, const LevelParams&) = default;
};

std::span<const KindInfo> list_kinds();

// Throws RangeError for a value outside the enumeration.
const KindInfo& kind_info(Kind kind);

// Accepts the snake_case name. Throws RangeError listing nothing but the bad token.
Kind parse_kind(std::string_view name);
std::string_view kind_name(Kind kind);

std::string_view category_code(Category category);   // "D.1" .. "D.7"
std::string_view category_label(Category category);  // "Blurs", "Color distortions", ...

// Throws RangeError when level is outside 1..5.
LevelParams level_params(Kind kind, int level);

struct DistortionSpec {
  Kind kind = Kind::gaussian_blur;
  int level = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const DistortionSpec&, const DistortionSpec&) = default;
};

}  // namespace epd::distort
