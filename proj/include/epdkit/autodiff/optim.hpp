#pragma once

#include <map>
#include <string>
#include <vector>

#include "epdkit/autodiff/tape.hpp"

namespace epd::ad {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// In-place first-order update. Adam keeps bias-corrected first and second
// moment estimates per parameter name.
template <typename T>
class Optimizer {
 public:
  struct Moments {
    Tensor<T> first;
    Tensor<T> second;
  };

  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  // Throws ContractError naming the first parameter without a gradient.
  // `lr_scale` multiplies the configured rate for this step only (schedules).
  void step(const std::vector<Parameter<T>*>& params, double lr_scale = 1.0);

  const OptimizerConfig& config() const noexcept { return config_; }
  long steps_taken() const noexcept { return steps_; }
  const std::map<std::string, Moments>& moments() const noexcept { return moments_; }
  // Restores persisted state (checkpoint resume).
  void restore(long steps, std::map<std::string, Moments> moments);

 private:
  OptimizerConfig config_;
  long steps_ = 0;
  std::map<std::string, Moments> moments_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace epd::ad
