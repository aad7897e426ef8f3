#include "epdkit/distort/color.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace epd::distort {
namespace {

constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};
// Exact inverse of kM by cofactors, so Lab round trips are limited only by
// floating-point rounding.
struct Matrix3 {
  double m[3][3];
};
constexpr Matrix3 invert(const double (&a)[3][3]) {
  Matrix3 out{};
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      out.m[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
    }
  return out;
}
constexpr Matrix3 kInverse = invert(kM);
constexpr auto& kMinv = kInverse.m;
constexpr double kWhite[3] = {kM[0][0] + kM[0][1] + kM[0][2], kM[1][0] + kM[1][1] + kM[1][2],
                              kM[2][0] + kM[2][1] + kM[2][2]};

double srgb_decode_exact(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }
double srgb_encode_exact(double v) { return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

// Linear interpolation in a 2^16-interval table over [0, 1]; worst-case error
// is below 1e-7. Values outside [0, 1] use the exact curve.
class TransferTable {
 public:
  static constexpr int kIntervals = 1 << 16;

  explicit TransferTable(double (*curve)(double)) : curve_(curve), values_(kIntervals + 1) {
    for (int i = 0; i <= kIntervals; ++i) values_[i] = curve(static_cast<double>(i) / kIntervals);
  }

  double operator()(double v) const {
    if (!(v >= 0.0 && v < 1.0)) return curve_(v);
    const double pos = v * kIntervals;
    const int i = static_cast<int>(pos);
    const double t = pos - i;
    return values_[i] + t * (values_[i + 1] - values_[i]);
  }

 private:
  double (*curve_)(double);
  std::vector<double> values_;
};

double srgb_decode(double v) {
  static const TransferTable table(srgb_decode_exact);
  return table(v);
}
double srgb_encode(double v) {
  static const TransferTable table(srgb_encode_exact);
  return table(v);
}

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }
double lab_finv(double f) {
  const double cube = f * f * f;
  return cube > kEpsilon ? cube : (116.0 * f - 16.0) / kKappa;
}

}  // namespace

Triple rgb_to_hsv(const Triple& rgb) {
  const auto [r, g, b] = rgb;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r)
      h = (g - b) / delta;
    else if (mx == g)
      h = 2.0 + (b - r) / delta;
    else
      h = 4.0 + (r - g) / delta;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

Triple hsv_to_rgb(const Triple& hsv) {
  const auto [h, s, v] = hsv;
  const double h6 = (h - std::floor(h)) * 6.0;
  const int sector = std::min(5, static_cast<int>(h6));
  const double f = h6 - sector;
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Triple rgb_to_lab(const Triple& rgb) {
  const double lin[3] = {srgb_decode(rgb[0]), srgb_decode(rgb[1]), srgb_decode(rgb[2])};
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double xyz = kM[i][0] * lin[0] + kM[i][1] * lin[1] + kM[i][2] * lin[2];
    f[i] = lab_f(xyz / kWhite[i]);
  }
  return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

Triple lab_to_rgb(const Triple& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;
  const double xyz[3] = {lab_finv(fx) * kWhite[0], lab_finv(fy) * kWhite[1], lab_finv(fz) * kWhite[2]};
  Triple out;
  for (int i = 0; i < 3; ++i) {
    const double lin = kMinv[i][0] * xyz[0] + kMinv[i][1] * xyz[1] + kMinv[i][2] * xyz[2];
    out[i] = srgb_encode(std::clamp(lin, 0.0, 1.0));
  }
  return out;
}

ImageBuf image_to_lab(const ImageBuf& rgb) {
  ImageBuf out(rgb.height(), rgb.width());
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const Triple lab = rgb_to_lab({src[i], src[i + 1], src[i + 2]});
    for (int c = 0; c < 3; ++c) dst[i + c] = static_cast<float>(lab[c]);
  }
  return out;
}

ImageBuf image_from_lab(const ImageBuf& lab) {
  ImageBuf out(lab.height(), lab.width());
  auto src = lab.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const Triple rgb = lab_to_rgb({src[i], src[i + 1], src[i + 2]});
    for (int c = 0; c < 3; ++c) dst[i + c] = static_cast<float>(rgb[c]);
  }
  return out;
}

}  // namespace epd::distort
