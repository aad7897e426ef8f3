#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "epdkit/autodiff/tensor.hpp"

namespace epd::ad {

template <typename T>
class Tape;

// Named trainable array. grad is populated by copy_gradients() after a
// backward pass and consumed by an optimizer.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  std::optional<Tensor<T>> grad;
};

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  std::size_t id() const noexcept { return id_; }
  Tape<T>& tape() const noexcept { return *tape_; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool has_grad() const;
  const Tensor<T>& grad() const;

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::size_t id) noexcept : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording. Nodes are appended in evaluation order, so the node
// vector is already a topological order and backward() walks it in reverse.
//
// A tape is single-owner: build and differentiate it on one thread. Parameters
// are referenced, not copied, so several tapes may read the same parameters
// concurrently as long as nothing mutates them.
template <typename T>
class Tape {
 public:
  // Propagates gradient from node `self` into its inputs' grad buffers.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var<T> constant(Tensor<T> value);
  // Leaf that receives a gradient.
  Var<T> leaf(Tensor<T> value);
  // Leaf referencing parameter storage; repeated calls with the same parameter
  // return the same node so shared weights accumulate into one gradient.
  Var<T> param(const Parameter<T>& p);

  // Appends an op output. The node requires grad iff any input does; fn is
  // dropped otherwise.
  Var<T> record(Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn);

  // Clears every gradient on the tape, seeds d(loss)/d(loss) = 1 and
  // propagates. A second call recomputes the same gradients; nothing accumulates
  // across calls.
  void backward(const Var<T>& loss);

  const Tensor<T>& value(std::size_t id) const { return *nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool has_grad(std::size_t id) const { return nodes_.at(id).grad.has_value(); }
  const Tensor<T>& grad(std::size_t id) const;
  // Zero-initialized on first access; used by backward functions.
  Tensor<T>& grad_buffer(std::size_t id);

  // Node id of a parameter registered with param(), if any.
  std::optional<std::size_t> find_param(const Parameter<T>& p) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::unique_ptr<Tensor<T>> owned;
    const Tensor<T>* value = nullptr;
    std::optional<Tensor<T>> grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

// Copies gradients from the tape into each parameter's grad slot. Parameters
// that were never reached get their grad reset to nullopt.
template <typename T>
void copy_gradients(const Tape<T>& tape, const std::vector<Parameter<T>*>& params);

extern template class Var<float>;
extern template class Var<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace epd::ad
