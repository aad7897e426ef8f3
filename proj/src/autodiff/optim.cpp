#include "epdkit/autodiff/optim.hpp"

#include <cmath>

#include "epdkit/core/error.hpp"

namespace epd::ad {

template <typename T>
void Optimizer<T>::step(const std::vector<Parameter<T>*>& params, double lr_scale) {
  for (const Parameter<T>* p : params) {
    if (!p->grad) throw ContractError("optimizer step: parameter '" + p->name + "' has no gradient");
    if (p->grad->shape() != p->value.shape()) {
      throw DimensionError("optimizer step: gradient shape of '" + p->name + "' is " +
                           to_string(p->grad->shape()) + ", value is " +
                           to_string(p->value.shape()));
    }
  }
  ++steps_;
  const double lr = config_.lr * lr_scale;
  if (config_.kind == OptimizerKind::sgd) {
    for (Parameter<T>* p : params) {
      T* w = p->value.data();
      const T* g = p->grad->data();
      for (std::size_t i = 0; i < p->value.size(); ++i) w[i] -= static_cast<T>(lr * g[i]);
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (Parameter<T>* p : params) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    Moments& m = it->second;
    if (inserted || m.first.shape() != p->value.shape()) {
      m.first = Tensor<T>(p->value.shape());
      m.second = Tensor<T>(p->value.shape());
    }
    T* w = p->value.data();
    const T* g = p->grad->data();
    T* m1 = m.first.data();
    T* m2 = m.second.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double gi = g[i];
      m1[i] = static_cast<T>(b1 * m1[i] + (1.0 - b1) * gi);
      m2[i] = static_cast<T>(b2 * m2[i] + (1.0 - b2) * gi * gi);
      const double mhat = m1[i] / c1;
      const double vhat = m2[i] / c2;
      w[i] = static_cast<T>(w[i] - lr * mhat / (std::sqrt(vhat) + config_.eps));
    }
  }
}

template <typename T>
void Optimizer<T>::restore(long steps, std::map<std::string, Moments> moments) {
  steps_ = steps;
  moments_ = std::move(moments);
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace epd::ad
