#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epd::metrics {

// All correlation functions take equal-length vectors with n >= 2 and throw
// DimensionError on length mismatch, RangeError for n < 2, and UndefinedError
// when either input is constant.

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Spearman: Pearson correlation of average ranks.
double srcc(std::span<const double> x, std::span<const double> y);

// Kendall tau-b with tie correction, O(n log n).
double krcc(std::span<const double> x, std::span<const double> y);

enum class Mapping { none, poly3, logistic4 };

std::string_view mapping_name(Mapping mapping);
Mapping parse_mapping(std::string_view name);  // RangeError on unknown names

// Least-squares cubic in the standardized variable z = (x - center) / scale.
struct Poly3 {
  std::array<double, 4> coef{};
  double center = 0.0;
  double scale = 1.0;
  double operator()(double x) const {
    const double z = (x - center) / scale;
    return coef[0] + z * (coef[1] + z * (coef[2] + z * coef[3]));
  }
};
Poly3 fit_poly3(std::span<const double> x, std::span<const double> y);

// y ~ b2 + (b1 - b2) / (1 + exp(-(x - b3) / |b4|)).
struct Logistic4 {
  double b1 = 0, b2 = 0, b3 = 0, b4 = 1;
  double operator()(double x) const;
};
struct LogisticFit {
  Logistic4 curve;
  bool converged = false;
};
LogisticFit fit_logistic4(std::span<const double> x, std::span<const double> y);

struct PlccResult {
  double value = 0.0;
  bool fallback = false;  // the requested fit failed; value is raw Pearson
};

// Pearson between mapping(x) and y, where mapping is fitted from x onto y.
// Mappings other than none need n >= 4 (RangeError otherwise).
PlccResult plcc(std::span<const double> x, std::span<const double> y, Mapping mapping = Mapping::none);

struct CorrelationReport {
  double srcc = 0.0;
  double krcc = 0.0;
  double plcc = 0.0;
  std::size_t n = 0;
  Mapping mapping = Mapping::none;
  bool fit_fallback = false;
};

CorrelationReport correlate(std::span<const double> predicted, std::span<const double> truth,
                            Mapping mapping = Mapping::none);

}  // namespace epd::metrics
