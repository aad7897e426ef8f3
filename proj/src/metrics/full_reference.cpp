#include "epdkit/metrics/full_reference.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "epdkit/core/error.hpp"

namespace epd::metrics {
namespace {

void require_same_shape(const ImageBuf& a, const ImageBuf& b) {
  if (!a.same_shape(b))
    throw DimensionError("image shapes differ: " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                         " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 1e-4;
constexpr double kC2 = 9e-4;

std::vector<double> luma_plane(const ImageBuf& img) {
  std::vector<double> out(static_cast<std::size_t>(img.height()) * img.width());
  auto d = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
  return out;
}

// Separable Gaussian filtering restricted to positions where the window fits.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const double* taps) {
  const int oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow), out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * plane[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const ImageBuf& ref, const ImageBuf& dist) {
  require_same_shape(ref, dist);
  auto a = ref.data();
  auto b = dist.data();
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(a.size()) / se);
}

double ssim(const ImageBuf& ref, const ImageBuf& dist) {
  require_same_shape(ref, dist);
  const int h = ref.height(), w = ref.width();
  if (h < kWindow || w < kWindow)
    throw DimensionError("ssim needs both sides >= 11, got " + std::to_string(h) + "x" + std::to_string(w));

  double taps[kWindow], total = 0.0;
  for (int k = 0; k < kWindow; ++k) {
    const double t = k - kWindow / 2;
    taps[k] = std::exp(-0.5 * t * t / (kSigma * kSigma));
    total += taps[k];
  }
  for (double& t : taps) t /= total;

  const auto x = luma_plane(ref), y = luma_plane(dist);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w, taps), my = filter_valid(y, h, w, taps);
  const auto sxx = filter_valid(xx, h, w, taps), syy = filter_valid(yy, h, w, taps), sxy = filter_valid(xy, h, w, taps);

  double sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
    sum += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
  }
  return sum / static_cast<double>(mx.size());
}

}  // namespace epd::metrics
