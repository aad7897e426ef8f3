#pragma once

// Central finite-difference oracle. It only ever runs forward passes, so it is
// independent of the backward implementations it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "epdkit/autodiff/ops.hpp"
#include "epdkit/core/rng.hpp"

namespace epd::testing {

using ad::Shape;
using TensorD = ad::Tensor<double>;
using VarD = ad::Var<double>;
using TapeD = ad::Tape<double>;

// Builds a scalar loss from leaves living on the given tape.
using LossBuilder = std::function<VarD(TapeD&, const std::vector<VarD>&)>;

inline TensorD random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  TensorD t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Values are a shuffled evenly spaced grid, so every pair differs by at least
// `spacing`. Max-type ops then have no near-ties within a finite-difference step.
inline TensorD distinct_tensor(Shape shape, std::uint64_t seed, double spacing = 0.05) {
  TensorD t(std::move(shape));
  Rng rng(seed);
  std::vector<double> grid(t.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = spacing * (static_cast<double>(i) - grid.size() / 2.0);
  for (std::size_t i = grid.size(); i > 1; --i) std::swap(grid[i - 1], grid[rng.below(i)]);
  std::copy(grid.begin(), grid.end(), t.data());
  return t;
}

// Contracts a non-scalar output against a fixed random tensor so every output
// element contributes to the loss with a distinct weight.
inline VarD project(const VarD& out, std::uint64_t seed) {
  TapeD& tape = out.tape();
  VarD weights = tape.constant(random_tensor(out.shape(), seed ^ 0xABCDEFULL));
  return ad::sum(ad::mul(out, weights));
}

inline double evaluate(const LossBuilder& build, const std::vector<TensorD>& inputs) {
  TapeD tape;
  std::vector<VarD> leaves;
  for (const TensorD& t : inputs) leaves.push_back(tape.constant(t));
  return build(tape, leaves).value().item();
}

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Relative error uses max(|analytic|, |numeric|, floor) as denominator so
// components that are exactly zero on both sides do not divide by zero.
inline GradCheck check_gradients(const LossBuilder& build, const std::vector<TensorD>& inputs,
                                 double step = 1e-3, double floor = 1e-6) {
  TapeD tape;
  std::vector<VarD> leaves;
  for (const TensorD& t : inputs) leaves.push_back(tape.leaf(t));
  VarD loss = build(tape, leaves);
  tape.backward(loss);

  GradCheck result;
  std::vector<TensorD> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const bool reached = leaves[k].has_grad();
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double analytic = reached ? leaves[k].grad()[i] : 0.0;
      probe[k][i] = inputs[k][i] + step;
      const double up = evaluate(build, probe);
      probe[k][i] = inputs[k][i] - step;
      const double down = evaluate(build, probe);
      probe[k][i] = inputs[k][i];
      const double numeric = (up - down) / (2.0 * step);
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      result.max_rel_error = std::max(result.max_rel_error, abs_err / denom);
    }
  }
  return result;
}

}  // namespace epd::testing
