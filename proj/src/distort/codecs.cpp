#include "epdkit/distort/codecs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "epdkit/core/error.hpp"
#include "epdkit/distort/filters.hpp"

namespace epd::distort {
namespace {

constexpr int kLumaTable[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr int kChromaTable[64] = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                  24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                  99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                  99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

std::array<double, 64> scaled_table(const int* base, int quality) {
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<double, 64> out{};
  for (int i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return out;
}

// Orthonormal DCT-II basis: basis[u][x].
std::array<std::array<double, 8>, 8> dct_basis() {
  std::array<std::array<double, 8>, 8> b{};
  for (int u = 0; u < 8; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int x = 0; x < 8; ++x) b[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  }
  return b;
}

void quantize_block(double block[64], const std::array<double, 64>& table,
                    const std::array<std::array<double, 8>, 8>& basis) {
  double tmp[64], coef[64];
  // rows then columns
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += basis[u][x] * block[y * 8 + x];
      tmp[y * 8 + u] = acc;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += basis[v][y] * tmp[y * 8 + u];
      coef[v * 8 + u] = std::round(acc / table[v * 8 + u]) * table[v * 8 + u];
    }
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += basis[v][y] * coef[v * 8 + u];
      tmp[y * 8 + u] = acc;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += basis[u][x] * tmp[y * 8 + u];
      block[y * 8 + x] = acc;
    }
}

// In-place forward 5/3 lifting on a strided signal; approximation samples go to
// the front, details to the back.
void lift_forward(double* x, int n, int stride, std::vector<double>& scratch) {
  if (n < 2) return;
  const int ns = (n + 1) / 2, nd = n / 2;
  scratch.assign(n, 0.0);
  double* s = scratch.data();
  double* d = scratch.data() + ns;
  for (int i = 0; i < nd; ++i) {
    const double left = x[(2 * i) * stride];
    const double right = 2 * i + 2 < n ? x[(2 * i + 2) * stride] : left;
    d[i] = x[(2 * i + 1) * stride] - 0.5 * (left + right);
  }
  for (int i = 0; i < ns; ++i) {
    const double dl = i > 0 ? d[i - 1] : d[0];
    const double dr = i < nd ? d[i] : d[nd - 1];
    s[i] = x[(2 * i) * stride] + 0.25 * (dl + dr);
  }
  for (int i = 0; i < n; ++i) x[i * stride] = scratch[i];
}

void lift_inverse(double* x, int n, int stride, std::vector<double>& scratch) {
  if (n < 2) return;
  const int ns = (n + 1) / 2, nd = n / 2;
  scratch.assign(n, 0.0);
  const double* s = x;
  auto d = [&](int i) { return x[(ns + i) * stride]; };
  for (int i = 0; i < ns; ++i) {
    const double dl = i > 0 ? d(i - 1) : d(0);
    const double dr = i < nd ? d(i) : d(nd - 1);
    scratch[2 * i] = s[i * stride] - 0.25 * (dl + dr);
  }
  for (int i = 0; i < nd; ++i) {
    const double left = scratch[2 * i];
    const double right = 2 * i + 2 < n ? scratch[2 * i + 2] : left;
    scratch[2 * i + 1] = d(i) + 0.5 * (left + right);
  }
  for (int i = 0; i < n; ++i) x[i * stride] = scratch[i];
}

double deadzone(double c, double step) {
  const double q = std::floor(std::abs(c) / step);
  if (q == 0.0) return 0.0;
  return std::copysign((q + 0.5) * step, c);
}

}  // namespace

ImageBuf jpeg_roundtrip(const ImageBuf& image, int quality) {
  if (quality < 1 || quality > 100) throw RangeError("jpeg quality must be in 1..100");
  const int h = image.height(), w = image.width();
  const int ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
  const auto luma = scaled_table(kLumaTable, quality);
  const auto chroma = scaled_table(kChromaTable, quality);
  const auto basis = dct_basis();

  // Planes in 0..255 YCbCr, level-shifted by -128, mirror-padded to whole blocks.
  std::vector<double> planes[3];
  for (auto& p : planes) p.resize(static_cast<std::size_t>(ph) * pw);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) {
      const int sy = reflect_index(y, h), sx = reflect_index(x, w);
      const double r = 255.0 * image.at(sy, sx, 0), g = 255.0 * image.at(sy, sx, 1), b = 255.0 * image.at(sy, sx, 2);
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
      planes[1][i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
      planes[2][i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
    }

  double block[64];
  for (int c = 0; c < 3; ++c)
    for (int by = 0; by < ph; by += 8)
      for (int bx = 0; bx < pw; bx += 8) {
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) block[y * 8 + x] = planes[c][static_cast<std::size_t>(by + y) * pw + bx + x];
        quantize_block(block, c == 0 ? luma : chroma, basis);
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) planes[c][static_cast<std::size_t>(by + y) * pw + bx + x] = block[y * 8 + x];
      }

  ImageBuf out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      const double Y = planes[0][i] + 128.0, cb = planes[1][i], cr = planes[2][i];
      out.at(y, x, 0) = static_cast<float>((Y + 1.402 * cr) / 255.0);
      out.at(y, x, 1) = static_cast<float>((Y - 0.344136 * cb - 0.714136 * cr) / 255.0);
      out.at(y, x, 2) = static_cast<float>((Y + 1.772 * cb) / 255.0);
    }
  out.clamp01();
  return out;
}

ImageBuf jpeg2000_roundtrip(const ImageBuf& image, double step) {
  if (!(step > 0.0)) throw RangeError("wavelet quantization step must be positive");
  const int h = image.height(), w = image.width();
  constexpr int kLevels = 2;
  std::vector<double> plane(static_cast<std::size_t>(h) * w), scratch;
  ImageBuf out(h, w);

  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) plane[static_cast<std::size_t>(y) * w + x] = image.at(y, x, c);

    int rh = h, rw = w;
    for (int level = 0; level < kLevels; ++level) {
      for (int y = 0; y < rh; ++y) lift_forward(&plane[static_cast<std::size_t>(y) * w], rw, 1, scratch);
      for (int x = 0; x < rw; ++x) lift_forward(&plane[x], rh, w, scratch);
      rh = (rh + 1) / 2;
      rw = (rw + 1) / 2;
    }
    // (rh, rw) is now the coarsest approximation band.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double& v = plane[static_cast<std::size_t>(y) * w + x];
        v = deadzone(v, y < rh && x < rw ? step / 8.0 : step);
      }

    int sizes_h[kLevels], sizes_w[kLevels];
    sizes_h[0] = h;
    sizes_w[0] = w;
    for (int level = 1; level < kLevels; ++level) {
      sizes_h[level] = (sizes_h[level - 1] + 1) / 2;
      sizes_w[level] = (sizes_w[level - 1] + 1) / 2;
    }
    for (int level = kLevels - 1; level >= 0; --level) {
      const int lh = sizes_h[level], lw = sizes_w[level];
      for (int x = 0; x < lw; ++x) lift_inverse(&plane[x], lh, w, scratch);
      for (int y = 0; y < lh; ++y) lift_inverse(&plane[static_cast<std::size_t>(y) * w], lw, 1, scratch);
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(y, x, c) = static_cast<float>(plane[static_cast<std::size_t>(y) * w + x]);
  }
  out.clamp01();
  return out;
}

}  // namespace epd::distort
