#pragma once

#include <span>
#include <vector>

#include "epdkit/autodiff/tape.hpp"

// Differentiable operations on [N, C, H, W] feature maps and [N, D] matrices.
// Every op records onto the tape of its first argument; all arguments must
// share that tape. Shape violations throw epd::DimensionError naming the axis.
namespace epd::ad {

enum class PoolMode { max, avg, global_avg, global_max };
enum class ChannelReduce { max, avg };
enum class Activation { relu, sigmoid };
enum class Binary { add, mul };

// Zero-padded cross-correlation. weight is [K, C, kh, kw], bias is [K].
// Output spatial size is floor((H + 2 * padding - kh) / stride) + 1.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride,
              int padding);

// Windowed pooling without padding, or global pooling to [N, C, 1, 1]
// (window and stride are ignored for the global modes). Max routes the
// gradient to the first maximal element.
template <typename T>
Var<T> pool(const Var<T>& input, PoolMode mode, int window = 0, int stride = 0);

// Per-pixel reduction over the channel axis: [N, C, H, W] -> [N, 1, H, W].
template <typename T>
Var<T> reduce_channel(const Var<T>& input, ChannelReduce mode);

// Concatenation along the channel axis; all parts share N, H and W.
template <typename T>
Var<T> concat_channels(std::span<const Var<T>> parts);

// Bilinear resize with corner alignment: output corners sample input corners
// exactly, so constant maps stay constant.
template <typename T>
Var<T> upsample_bilinear(const Var<T>& input, int out_h, int out_w);

template <typename T>
Var<T> activation(const Var<T>& input, Activation kind);
template <typename T>
Var<T> relu(const Var<T>& input) {
  return activation(input, Activation::relu);
}
template <typename T>
Var<T> sigmoid(const Var<T>& input) {
  return activation(input, Activation::sigmoid);
}

// input [N, D] times weight [D, M] plus bias [M].
template <typename T>
Var<T> linear(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);

// Elementwise with right-aligned broadcasting; size-1 axes expand. Gradients
// are summed back over the broadcast axes.
template <typename T>
Var<T> elementwise(const Var<T>& a, const Var<T>& b, Binary op);
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return elementwise(a, b, Binary::add);
}
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return elementwise(a, b, Binary::mul);
}

// (1/N) * sum (pred_i - target_i)^2 over two length-N vectors.
template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target);

// Sum of all elements as a one-element tensor.
template <typename T>
Var<T> sum(const Var<T>& input);

template <typename T>
Var<T> reshape(const Var<T>& input, Shape shape);

// Shape produced by broadcasting a against b; throws on incompatible axes.
Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace epd::ad
