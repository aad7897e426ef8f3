#include "epdkit/metrics/correlation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "epdkit/core/error.hpp"

namespace epd::metrics {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DimensionError("score vectors differ in length: " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  if (x.size() < 2) throw RangeError("correlation needs at least 2 samples, got " + std::to_string(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw RangeError("non-finite score at index " + std::to_string(i));
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
}

void check_not_constant(std::span<const double> x, std::span<const double> y) {
  if (is_constant(x) || is_constant(y)) throw UndefinedError("correlation undefined for a constant score vector");
}

double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedError("correlation undefined for a constant score vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::int64_t tie_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Counts pairs (i < j) with v[i] > v[j] while sorting v ascending.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buffer, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t count = count_inversions(v, buffer, lo, mid) + count_inversions(v, buffer, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      count += static_cast<std::int64_t>(mid - i);
      buffer[k++] = v[j++];
    } else {
      buffer[k++] = v[i++];
    }
  }
  while (i < mid) buffer[k++] = v[i++];
  while (j < hi) buffer[k++] = v[j++];
  std::copy(buffer.begin() + lo, buffer.begin() + hi, v.begin() + lo);
  return count;
}

struct LogisticFunctor : Eigen::DenseFunctor<double> {
  std::span<const double> x, y;
  LogisticFunctor(std::span<const double> xs, std::span<const double> ys)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(xs.size())), x(xs), y(ys) {}

  int operator()(const InputType& b, ValueType& residual) const {
    const Logistic4 f{b[0], b[1], b[2], b[3]};
    for (std::size_t i = 0; i < x.size(); ++i) residual[i] = f(x[i]) - y[i];
    return 0;
  }
  int df(const InputType& b, JacobianType& jac) const {
    const double scale = std::max(std::abs(b[3]), 1e-12);
    const double sign = b[3] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - b[2]) / scale;
      const double s = 1.0 / (1.0 + std::exp(-u));
      const double ds = s * (1.0 - s);
      jac(i, 0) = s;
      jac(i, 1) = 1.0 - s;
      jac(i, 2) = (b[0] - b[1]) * ds * (-1.0 / scale);
      jac(i, 3) = (b[0] - b[1]) * ds * (-u / scale) * sign;
    }
    return 0;
  }
};

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  check_not_constant(x, y);
  return pearson_unchecked(x, y);
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  check_not_constant(x, y);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson_unchecked(rx, ry);
}

double krcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  check_not_constant(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t total = tie_pairs(static_cast<std::int64_t>(n));
  std::int64_t x_ties = 0, joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    x_ties += tie_pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t k = i; k < j;) {
      std::size_t m = k;
      while (m < j && y[order[m]] == y[order[k]]) ++m;
      joint_ties += tie_pairs(static_cast<std::int64_t>(m - k));
      k = m;
    }
    i = j;
  }

  std::vector<double> ys(n), buffer(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t discordant = count_inversions(ys, buffer, 0, n);

  std::int64_t y_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && ys[j] == ys[i]) ++j;
    y_ties += tie_pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const double numerator = static_cast<double>(total - x_ties - y_ties + joint_ties - 2 * discordant);
  const double denominator =
      std::sqrt(static_cast<double>(total - x_ties)) * std::sqrt(static_cast<double>(total - y_ties));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

std::string_view mapping_name(Mapping mapping) {
  switch (mapping) {
    case Mapping::none: return "none";
    case Mapping::poly3: return "poly3";
    case Mapping::logistic4: return "logistic4";
  }
  return "none";
}

Mapping parse_mapping(std::string_view name) {
  if (name == "none") return Mapping::none;
  if (name == "poly3") return Mapping::poly3;
  if (name == "logistic4") return Mapping::logistic4;
  throw RangeError("unknown mapping '" + std::string(name) + "' (expected none, poly3 or logistic4)");
}

Poly3 fit_poly3(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  Poly3 fit;
  fit.center = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - fit.center) * (v - fit.center);
  fit.scale = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 1.0;

  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (x[i] - fit.center) / fit.scale;
    design(i, 0) = 1.0;
    design(i, 1) = z;
    design(i, 2) = z * z;
    design(i, 3) = z * z * z;
    target[i] = y[i];
  }
  const Eigen::Vector4d coef = design.colPivHouseholderQr().solve(target);
  for (int k = 0; k < 4; ++k) fit.coef[k] = coef[k];
  return fit;
}

double Logistic4::operator()(double x) const {
  const double scale = std::max(std::abs(b4), 1e-12);
  return b2 + (b1 - b2) / (1.0 + std::exp(-(x - b3) / scale));
}

LogisticFit fit_logistic4(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mx) * (v - mx);
  const double sx = var > 0.0 ? std::sqrt(var / n) : 1.0;

  // Start with the upper asymptote on the side the data trends toward.
  double slope = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) slope += (x[i] - mx) * y[i];
  Eigen::VectorXd b(4);
  b << (slope >= 0 ? *ymax : *ymin), (slope >= 0 ? *ymin : *ymax), mx, sx;

  LogisticFunctor functor(x, y);
  Eigen::LevenbergMarquardt<LogisticFunctor> solver(functor);
  solver.setMaxfev(2000);
  const auto status = solver.minimize(b);

  LogisticFit fit;
  fit.curve = {b[0], b[1], b[2], b[3]};
  const bool finite = b.allFinite();
  fit.converged = finite && status >= Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall &&
                  status <= Eigen::LevenbergMarquardtSpace::CosinusTooSmall;
  return fit;
}

PlccResult plcc(std::span<const double> x, std::span<const double> y, Mapping mapping) {
  check_pair(x, y);
  check_not_constant(x, y);
  if (mapping == Mapping::none) return {pearson_unchecked(x, y), false};
  if (x.size() < 4) throw RangeError("fitted PLCC needs at least 4 samples");

  std::vector<double> fitted(x.size());
  if (mapping == Mapping::poly3) {
    const Poly3 fit = fit_poly3(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = fit(x[i]);
  } else {
    const LogisticFit fit = fit_logistic4(x, y);
    if (!fit.converged) return {pearson_unchecked(x, y), true};
    for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = fit.curve(x[i]);
  }
  const bool usable = std::all_of(fitted.begin(), fitted.end(), [](double v) { return std::isfinite(v); }) &&
                      !is_constant(fitted);
  if (!usable) return {pearson_unchecked(x, y), true};
  return {pearson_unchecked(fitted, y), false};
}

CorrelationReport correlate(std::span<const double> predicted, std::span<const double> truth, Mapping mapping) {
  CorrelationReport report;
  report.srcc = srcc(predicted, truth);
  report.krcc = krcc(predicted, truth);
  const PlccResult p = plcc(predicted, truth, mapping);
  report.plcc = p.value;
  report.fit_fallback = p.fallback;
  report.n = predicted.size();
  report.mapping = mapping;
  return report;
}

}  // namespace epd::metrics
