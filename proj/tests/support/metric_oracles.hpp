#pragma once

// Definitional implementations of the correlation statistics. Deliberately
// naive (O(n^2), raw-sum formulas) so they share no code path with the
// library versions they check.

#include <cmath>
#include <cstdint>
#include <vector>

#include "epdkit/core/rng.hpp"

namespace epd::testing {

inline double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

inline std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (j != i && v[j] == v[i]) ++equal;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

inline double srcc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_oracle(rank_oracle(x), rank_oracle(y));
}

// tau-b by enumerating every pair.
inline double krcc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, tie_x_only = 0, tie_y_only = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0)
        ++tie_x_only;
      else if (dy == 0)
        ++tie_y_only;
      else if ((dx > 0) == (dy > 0))
        ++concordant;
      else
        ++discordant;
    }
  return (concordant - discordant) /
         std::sqrt((concordant + discordant + tie_x_only) * (concordant + discordant + tie_y_only));
}

// Random vector of length n; about half of the draws come from a small integer
// set so ties are common. Never constant.
inline std::vector<double> tied_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (;;) {
    const bool coarse = rng.uniform() < 0.5;
    for (double& a : v) a = coarse ? static_cast<double>(rng.below(6)) : rng.normal();
    for (std::size_t i = 0; i < n; ++i)
      if (rng.uniform() < 0.2) v[i] = v[rng.below(n)];
    for (double a : v)
      if (a != v[0]) return v;
  }
}

}  // namespace epd::testing
