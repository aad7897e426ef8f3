#include "epdkit/autodiff/tape.hpp"

#include "epdkit/core/error.hpp"

namespace epd::ad {

template <typename T>
const Tensor<T>& Var<T>::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::has_grad() const {
  return tape_ && tape_->has_grad(id_);
}

template <typename T>
const Tensor<T>& Var<T>::grad() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->grad(id_);
}

template <typename T>
Var<T> Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node node;
  node.owned = std::make_unique<Tensor<T>>(std::move(value));
  node.value = node.owned.get();
  return push(std::move(node));
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  Node node;
  node.owned = std::make_unique<Tensor<T>>(std::move(value));
  node.value = node.owned.get();
  node.requires_grad = true;
  return push(std::move(node));
}

template <typename T>
Var<T> Tape<T>::param(const Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var<T>(this, it->second);
  }
  Node node;
  node.value = &p.value;
  node.requires_grad = true;
  Var<T> v = push(std::move(node));
  param_nodes_.emplace(&p, v.id());
  return v;
}

template <typename T>
std::optional<std::size_t> Tape<T>::find_param(const Parameter<T>& p) const {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return it->second;
  return std::nullopt;
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node node;
  node.owned = std::make_unique<Tensor<T>>(std::move(value));
  node.value = node.owned.get();
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw ContractError("op input refers to a node not on this tape");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  if (node.requires_grad) {
    node.inputs = std::move(inputs);
    node.backward = std::move(fn);
  }
  return push(std::move(node));
}

template <typename T>
const Tensor<T>& Tape<T>::grad(std::size_t id) const {
  const Node& node = nodes_.at(id);
  if (!node.grad) {
    throw ContractError("node " + std::to_string(id) + " has no gradient; run backward() first");
  }
  return *node.grad;
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(std::size_t id) {
  Node& node = nodes_.at(id);
  if (!node.grad) node.grad.emplace(node.value->shape(), T(0));
  return *node.grad;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!loss.valid() || &loss.tape() != this) throw ContractError("loss does not belong to this tape");
  const Tensor<T>& lv = value(loss.id());
  if (lv.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(lv.shape()));
  }
  for (Node& node : nodes_) node.grad.reset();
  if (!nodes_[loss.id()].requires_grad) {
    throw ContractError("loss does not depend on any differentiable input");
  }
  grad_buffer(loss.id()).fill(T(1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad && node.backward) node.backward(*this, i);
  }
}

template <typename T>
void copy_gradients(const Tape<T>& tape, const std::vector<Parameter<T>*>& params) {
  for (Parameter<T>* p : params) {
    const auto id = tape.find_param(*p);
    if (id && tape.has_grad(*id)) {
      p->grad = tape.grad(*id);
    } else {
      p->grad.reset();
    }
  }
}

template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;
template void copy_gradients(const Tape<float>&, const std::vector<Parameter<float>*>&);
template void copy_gradients(const Tape<double>&, const std::vector<Parameter<double>*>&);

}  // namespace epd::ad
