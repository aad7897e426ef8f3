#include "epdkit/distort/distort.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "epdkit/core/error.hpp"
#include "epdkit/core/parallel.hpp"
#include "epdkit/core/rng.hpp"
#include "epdkit/distort/codecs.hpp"
#include "epdkit/distort/color.hpp"
#include "epdkit/distort/filters.hpp"

namespace epd::distort {
namespace {

template <typename F>
ImageBuf map_values(const ImageBuf& image, F&& f) {
  ImageBuf out = image;
  for (float& v : out.data()) v = static_cast<float>(f(static_cast<double>(v)));
  return out;
}

template <typename F>
ImageBuf map_pixels(const ImageBuf& image, F&& f) {
  ImageBuf out = image;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); i += 3) {
    const Triple t = f(Triple{d[i], d[i + 1], d[i + 2]});
    for (int c = 0; c < 3; ++c) d[i + c] = static_cast<float>(t[c]);
  }
  return out;
}

ImageBuf shifted_channels(const ImageBuf& image, int offset) {
  // red moves right, blue moves down; green stays
  ImageBuf out = image;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      out.at(y, x, 0) = image.at(y, reflect_index(x - offset, image.width()), 0);
      out.at(y, x, 2) = image.at(reflect_index(y - offset, image.height()), x, 2);
    }
  return out;
}

ImageBuf quantize_channels(const ImageBuf& image, int levels) {
  const double top = levels - 1;
  return map_values(image, [top](double v) { return std::round(std::clamp(v, 0.0, 1.0) * top) / top; });
}

ImageBuf quantize_luma(const ImageBuf& image, int levels) {
  const double top = levels - 1;
  return map_pixels(image, [top](const Triple& p) {
    const double y = luma(p[0], p[1], p[2]);
    const double shift = std::round(std::clamp(y, 0.0, 1.0) * top) / top - y;
    return Triple{p[0] + shift, p[1] + shift, p[2] + shift};
  });
}

// Fills `count` standard normal draws, two per Box-Muller evaluation.
std::vector<float> normal_draws(std::size_t count, Rng& rng) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; i += 2) {
    const auto pair = rng.normal_pair();
    out[i] = static_cast<float>(pair[0]);
    if (i + 1 < count) out[i + 1] = static_cast<float>(pair[1]);
  }
  return out;
}

ImageBuf add_noise(const ImageBuf& image, double sigma, bool per_channel, Rng& rng) {
  ImageBuf out = image;
  auto d = out.data();
  const float s = static_cast<float>(sigma);
  if (per_channel) {
    const auto noise = normal_draws(d.size(), rng);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * noise[i];
  } else {
    const auto noise = normal_draws(d.size() / 3, rng);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * noise[i / 3];
  }
  return out;
}

ImageBuf impulse(const ImageBuf& image, double p, Rng& rng) {
  ImageBuf out = image;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); i += 3) {
    if (rng.uniform() >= p) continue;
    const float v = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    d[i] = d[i + 1] = d[i + 2] = v;
  }
  return out;
}

ImageBuf multiplicative(const ImageBuf& image, double sigma, Rng& rng) {
  ImageBuf out = image;
  auto d = out.data();
  const auto noise = normal_draws(d.size(), rng);
  const float s = static_cast<float>(sigma);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0f + s * noise[i];
  return out;
}

ImageBuf jitter(const ImageBuf& image, int radius, Rng& rng) {
  const int h = image.height(), w = image.width();
  ImageBuf out(h, w);
  const std::uint64_t span = 2 * radius + 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int dy = static_cast<int>(rng.below(span)) - radius;
      const int dx = static_cast<int>(rng.below(span)) - radius;
      const int sy = reflect_index(y + dy, h), sx = reflect_index(x + dx, w);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  return out;
}

ImageBuf relocate_patches(const ImageBuf& image, int max_shift, Rng& rng) {
  constexpr int kPatch = 8;
  constexpr int kPatches = 16;
  const int h = image.height(), w = image.width();
  ImageBuf out = image;
  for (int n = 0; n < kPatches; ++n) {
    const int sy = static_cast<int>(rng.below(h - kPatch + 1));
    const int sx = static_cast<int>(rng.below(w - kPatch + 1));
    int dy = 0, dx = 0;
    while (dy == 0 && dx == 0) {
      dy = static_cast<int>(rng.below(2 * max_shift + 1)) - max_shift;
      dx = static_cast<int>(rng.below(2 * max_shift + 1)) - max_shift;
    }
    const int ty = std::clamp(sy + dy, 0, h - kPatch), tx = std::clamp(sx + dx, 0, w - kPatch);
    for (int y = 0; y < kPatch; ++y)
      for (int x = 0; x < kPatch; ++x)
        for (int c = 0; c < 3; ++c) out.at(ty + y, tx + x, c) = image.at(sy + y, sx + x, c);
  }
  return out;
}

ImageBuf pixelate(const ImageBuf& image, int block) {
  const int h = image.height(), w = image.width();
  ImageBuf out(h, w);
  for (int by = 0; by < h; by += block)
    for (int bx = 0; bx < w; bx += block) {
      const int ey = std::min(by + block, h), ex = std::min(bx + block, w);
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) acc += image.at(y, x, c);
        const float mean = static_cast<float>(acc / ((ey - by) * (ex - bx)));
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) out.at(y, x, c) = mean;
      }
    }
  return out;
}

ImageBuf color_blocks(const ImageBuf& image, int count, Rng& rng) {
  const int h = image.height(), w = image.width();
  const int side = std::max(2, std::min(h, w) / 8);
  ImageBuf out = image;
  for (int n = 0; n < count; ++n) {
    const int y0 = static_cast<int>(rng.below(h - side + 1));
    const int x0 = static_cast<int>(rng.below(w - side + 1));
    const float color[3] = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                            static_cast<float>(rng.uniform())};
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x)
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = color[c];
  }
  return out;
}

ImageBuf unsharp(const ImageBuf& image, double amount) {
  const ImageBuf blurred = gaussian_blur(image, 1.0);
  ImageBuf out = image;
  auto d = out.data();
  auto b = blurred.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(d[i] + amount * (d[i] - b[i]));
  return out;
}

ImageBuf dispatch(const ImageBuf& image, const DistortionSpec& spec, double p) {
  Rng rng(spec.seed);
  switch (spec.kind) {
    case Kind::gaussian_blur: return gaussian_blur(image, p);
    case Kind::lens_blur: return disk_blur(image, static_cast<int>(p));
    case Kind::motion_blur: return motion_blur(image, static_cast<int>(p), rng.uniform() * std::numbers::pi);
    case Kind::color_diffusion: return image_from_lab(gaussian_blur(image_to_lab(image), p, 0b110));
    case Kind::color_shift: return shifted_channels(image, static_cast<int>(p));
    case Kind::color_quantization: return quantize_channels(image, static_cast<int>(p));
    case Kind::hsv_saturation:
      return map_pixels(image, [p](const Triple& rgb) {
        Triple hsv = rgb_to_hsv(rgb);
        hsv[1] *= p;
        return hsv_to_rgb(hsv);
      });
    case Kind::lab_saturation:
      return map_pixels(image, [p](const Triple& rgb) {
        Triple lab = rgb_to_lab(rgb);
        lab[1] *= p;
        lab[2] *= p;
        return lab_to_rgb(lab);
      });
    case Kind::jpeg2000: return jpeg2000_roundtrip(image, p);
    case Kind::jpeg: return jpeg_roundtrip(image, static_cast<int>(p));
    case Kind::white_noise: return add_noise(image, p, false, rng);
    case Kind::color_noise: return add_noise(image, p, true, rng);
    case Kind::impulse_noise: return impulse(image, p, rng);
    case Kind::multiplicative_noise: return multiplicative(image, p, rng);
    case Kind::gaussian_denoise: {
      ImageBuf noisy = add_noise(image, p, true, rng);
      noisy.clamp01();
      return gaussian_blur(noisy, 1.0);
    }
    case Kind::brighten:
    case Kind::darken:
      return map_values(image, [p](double v) { return std::pow(std::clamp(v, 0.0, 1.0), p); });
    case Kind::mean_shift: return map_values(image, [p](double v) { return v + p; });
    case Kind::jitter: return jitter(image, static_cast<int>(p), rng);
    case Kind::non_eccentricity_patch: return relocate_patches(image, static_cast<int>(p), rng);
    case Kind::pixelate: return pixelate(image, static_cast<int>(p));
    case Kind::quantization: return quantize_luma(image, static_cast<int>(p));
    case Kind::color_block: return color_blocks(image, static_cast<int>(p), rng);
    case Kind::high_sharpen: return unsharp(image, p);
    case Kind::contrast_change: return map_values(image, [p](double v) { return 0.5 + p * (v - 0.5); });
  }
  throw RangeError("unknown distortion kind");
}

}  // namespace

ImageBuf apply_distortion(const ImageBuf& image, const DistortionSpec& spec) {
  const LevelParams params = level_params(spec.kind, spec.level);
  const KindInfo& info = kind_info(spec.kind);
  if (image.height() < info.min_support || image.width() < info.min_support)
    throw DimensionError(std::string(info.name) + " needs at least " + std::to_string(info.min_support) + "x" +
                         std::to_string(info.min_support) + " pixels, got " + std::to_string(image.height()) + "x" +
                         std::to_string(image.width()));
  ImageBuf out = dispatch(image, spec, params.value);
  out.clamp01();
  return out;
}

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t index) noexcept { return seed ^ splitmix64(index); }

std::vector<ImageBuf> distort_batch(std::span<const ImageBuf> images, const DistortionSpec& spec) {
  if (images.empty()) throw RangeError("distort_batch needs at least one image");
  std::vector<ImageBuf> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    DistortionSpec frame = spec;
    frame.seed = frame_seed(spec.seed, i);
    out[i] = apply_distortion(images[i], frame);
  });
  return out;
}

}  // namespace epd::distort
