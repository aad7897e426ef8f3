#include "epdkit/distort/filters.hpp"

#include <cmath>

namespace epd::distort {

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[i + radius];
  }
  std::vector<float> out(taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) out[i] = static_cast<float>(taps[i] / total);
  return out;
}

ImageBuf convolve_separable(const ImageBuf& image, std::span<const float> kernel, unsigned channel_mask) {
  const int h = image.height(), w = image.width();
  const int radius = static_cast<int>(kernel.size()) / 2;
  const int taps = static_cast<int>(kernel.size());
  const std::size_t row_len = static_cast<std::size_t>(w) * 3;

  // Horizontal pass over a mirror-padded copy of each row, all channels at once.
  std::vector<float> tmp(static_cast<std::size_t>(h) * row_len);
  std::vector<float> padded(static_cast<std::size_t>(w + 2 * radius) * 3);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w + 2 * radius; ++i) {
      const int sx = reflect_index(i - radius, w);
      for (int c = 0; c < 3; ++c) padded[i * 3 + c] = image.at(y, sx, c);
    }
    float* dst = &tmp[y * row_len];
    for (std::size_t j = 0; j < row_len; ++j) {
      float acc = 0.0f;
      for (int k = 0; k < taps; ++k) acc += kernel[k] * padded[j + 3 * k];
      dst[j] = acc;
    }
  }

  // Vertical pass accumulates whole rows.
  ImageBuf out(h, w);
  auto out_data = out.data();
  for (int y = 0; y < h; ++y) {
    float* dst = &out_data[y * row_len];
    for (int k = 0; k < taps; ++k) {
      const float weight = kernel[k];
      const float* src = &tmp[reflect_index(y + k - radius, h) * row_len];
      for (std::size_t j = 0; j < row_len; ++j) dst[j] += weight * src[j];
    }
  }

  if ((channel_mask & 0b111) != 0b111) {
    auto in = image.data();
    for (std::size_t i = 0; i < out_data.size(); ++i)
      if (!(channel_mask & (1u << (i % 3)))) out_data[i] = in[i];
  }
  return out;
}

ImageBuf gaussian_blur(const ImageBuf& image, double sigma, unsigned channel_mask) {
  const auto kernel = gaussian_kernel(sigma);
  return convolve_separable(image, kernel, channel_mask);
}

ImageBuf disk_blur(const ImageBuf& image, int radius) {
  const int h = image.height(), w = image.width();
  // The disk is a union of horizontal runs; each run is a difference of
  // prefix sums over a mirror-padded row.
  std::vector<int> half_width(2 * radius + 1);
  int taps = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    half_width[dy + radius] = static_cast<int>(std::floor(std::sqrt(double(radius * radius - dy * dy))));
    taps += 2 * half_width[dy + radius] + 1;
  }
  const int pw = w + 2 * radius + 1;
  std::vector<double> prefix(static_cast<std::size_t>(h) * pw * 3);
  for (int y = 0; y < h; ++y)
    for (int c = 0; c < 3; ++c) {
      double run = 0.0;
      prefix[(static_cast<std::size_t>(y) * pw) * 3 + c] = 0.0;
      for (int i = 0; i < w + 2 * radius; ++i) {
        run += image.at(y, reflect_index(i - radius, w), c);
        prefix[(static_cast<std::size_t>(y) * pw + i + 1) * 3 + c] = run;
      }
    }
  ImageBuf out(h, w);
  const double inv = 1.0 / taps;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -radius; dy <= radius; ++dy) {
          const int row = reflect_index(y + dy, h);
          const int hw = half_width[dy + radius];
          // padded index of column x + dx is x + dx + radius
          const std::size_t base = static_cast<std::size_t>(row) * pw;
          acc += prefix[(base + x + radius + hw + 1) * 3 + c] - prefix[(base + x + radius - hw) * 3 + c];
        }
        out.at(y, x, c) = static_cast<float>(acc * inv);
      }
  return out;
}

float sample_bilinear(const ImageBuf& image, double y, double x, int c) noexcept {
  const int h = image.height(), w = image.width();
  const double fy = std::floor(y), fx = std::floor(x);
  const double ty = y - fy, tx = x - fx;
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const int ya = reflect_index(y0, h), yb = reflect_index(y0 + 1, h);
  const int xa = reflect_index(x0, w), xb = reflect_index(x0 + 1, w);
  const double top = (1.0 - tx) * image.at(ya, xa, c) + tx * image.at(ya, xb, c);
  const double bottom = (1.0 - tx) * image.at(yb, xa, c) + tx * image.at(yb, xb, c);
  return static_cast<float>((1.0 - ty) * top + ty * bottom);
}

ImageBuf motion_blur(const ImageBuf& image, int length, double angle) {
  const int h = image.height(), w = image.width();
  const double dy = std::sin(angle), dx = std::cos(angle);
  // Every pixel samples the same sub-pixel offsets, so the bilinear weights
  // collapse into one sparse kernel over integer offsets.
  const int reach = length / 2 + 2;
  const int side = 2 * reach + 1;
  std::vector<double> grid(static_cast<std::size_t>(side) * side, 0.0);
  for (int k = 0; k < length; ++k) {
    const double t = k - (length - 1) / 2.0;
    const double py = t * dy, px = t * dx;
    const double fy = std::floor(py), fx = std::floor(px);
    const double ty = py - fy, tx = px - fx;
    const int oy = static_cast<int>(fy) + reach, ox = static_cast<int>(fx) + reach;
    grid[oy * side + ox] += (1.0 - ty) * (1.0 - tx);
    grid[oy * side + ox + 1] += (1.0 - ty) * tx;
    grid[(oy + 1) * side + ox] += ty * (1.0 - tx);
    grid[(oy + 1) * side + ox + 1] += ty * tx;
  }
  struct Tap {
    int dy, dx;
    float weight;
  };
  std::vector<Tap> taps;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      if (grid[i * side + j] > 0.0)
        taps.push_back({i - reach, j - reach, static_cast<float>(grid[i * side + j] / length)});

  // mirror-padded copy so the inner loop needs no index folding
  const int pw = w + 2 * reach;
  std::vector<float> padded(static_cast<std::size_t>(h + 2 * reach) * pw * 3);
  for (int y = 0; y < h + 2 * reach; ++y)
    for (int x = 0; x < pw; ++x)
      for (int c = 0; c < 3; ++c)
        padded[(static_cast<std::size_t>(y) * pw + x) * 3 + c] =
            image.at(reflect_index(y - reach, h), reflect_index(x - reach, w), c);

  ImageBuf out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc[3] = {0.0f, 0.0f, 0.0f};
      for (const Tap& tap : taps) {
        const float* px = &padded[(static_cast<std::size_t>(y + reach + tap.dy) * pw + x + reach + tap.dx) * 3];
        for (int c = 0; c < 3; ++c) acc[c] += tap.weight * px[c];
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = acc[c];
    }
  return out;
}

}  // namespace epd::distort
