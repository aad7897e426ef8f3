#include "epdkit/net/maeiqa.hpp"

#include <cmath>

#include "epdkit/autodiff/ops.hpp"
#include "epdkit/core/error.hpp"
#include "epdkit/core/parallel.hpp"
#include "epdkit/core/rng.hpp"

namespace epd::net {
namespace {

constexpr std::size_t kPredictBatch = 8;
constexpr double kHeadBiasInit = 2.5;  // middle of the DMOS range

std::string level_name(const char* prefix, int level) { return prefix + std::to_string(level); }

// Brings a pyramid map to `side` x `side`: box-average when shrinking,
// bilinear when growing.
template <typename T>
ad::Var<T> resize_to(const ad::Var<T>& x, int side) {
  const int current = static_cast<int>(x.shape()[2]);
  if (current == side) return x;
  if (current > side) {
    const int factor = current / side;
    return ad::pool(x, ad::PoolMode::avg, factor, factor);
  }
  return ad::upsample_bilinear(x, side, side);
}

}  // namespace

template <typename T>
ad::Tensor<T> images_to_input(std::span<const ImageBuf> images, int size) {
  const std::size_t s = static_cast<std::size_t>(size);
  ad::Tensor<T> out(ad::Shape{images.size(), 3, s, s});
  T* dst = out.data();
  for (const ImageBuf& img : images) {
    if (img.height() != size || img.width() != size)
      throw DimensionError("model expects " + std::to_string(size) + "x" + std::to_string(size) +
                           " images, got " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
    const auto src = img.data();
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < s * s; ++i) *dst++ = static_cast<T>(src[i * 3 + c]) - T(0.5);
  }
  return out;
}

template <typename T>
Maeiqa<T>::Maeiqa(ModelConfig cfg) : cfg_(std::move(cfg)) {
  for (auto& spec : parameter_specs(cfg_)) {
    index_.emplace(spec.name, params_.size());
    params_.push_back(ad::Parameter<T>{spec.name, ad::Tensor<T>(spec.shape), std::nullopt});
  }
}

template <typename T>
Maeiqa<T>::Maeiqa(ModelConfig cfg, std::uint64_t seed) : Maeiqa(std::move(cfg)) {
  Rng rng(seed);
  const auto specs = parameter_specs(cfg_);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& spec = specs[k];
    auto values = params_[k].value.values();
    double stddev = 0.0;
    switch (spec.init) {
      case ParamSpec::Init::he: stddev = std::sqrt(2.0 / spec.fan_in); break;
      case ParamSpec::Init::linear: stddev = std::sqrt(1.0 / spec.fan_in); break;
      case ParamSpec::Init::small: stddev = 0.1 * std::sqrt(1.0 / spec.fan_in); break;
      case ParamSpec::Init::zero: break;
      case ParamSpec::Init::bias_mid:
        for (T& v : values) v = static_cast<T>(kHeadBiasInit);
        break;
    }
    if (stddev == 0.0) continue;
    for (std::size_t i = 0; i < values.size(); i += 2) {
      const auto pair = rng.normal_pair();
      values[i] = static_cast<T>(stddev * pair[0]);
      if (i + 1 < values.size()) values[i + 1] = static_cast<T>(stddev * pair[1]);
    }
  }
}

template <typename T>
Maeiqa<T> Maeiqa<T>::zeros(ModelConfig cfg) {
  return Maeiqa(std::move(cfg));
}

template <typename T>
std::vector<ad::Parameter<T>*> Maeiqa<T>::parameter_ptrs() {
  std::vector<ad::Parameter<T>*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
ad::Parameter<T>& Maeiqa<T>::param(std::string_view name) {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw RangeError("model has no parameter '" + std::string(name) + "'");
  return params_[it->second];
}

template <typename T>
const ad::Parameter<T>& Maeiqa<T>::param(std::string_view name) const {
  return const_cast<Maeiqa*>(this)->param(name);
}

template <typename T>
std::size_t Maeiqa<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

template <typename T>
typename Maeiqa<T>::V Maeiqa<T>::w(ad::Tape<T>& tape, const std::string& name) const {
  return tape.param(param(name));
}

template <typename T>
typename Maeiqa<T>::V Maeiqa<T>::conv(ad::Tape<T>& tape, const V& x, const std::string& name, int stride,
                                      int padding) const {
  return ad::conv2d(x, w(tape, name + ".weight"), w(tape, name + ".bias"), stride, padding);
}

template <typename T>
typename Maeiqa<T>::Maps Maeiqa<T>::extract_stages(ad::Tape<T>& tape, const V& input) const {
  const auto& shape = input.shape();
  const std::size_t s = static_cast<std::size_t>(cfg_.input_size);
  if (shape.size() != 4 || shape[1] != 3 || shape[2] != s || shape[3] != s)
    throw DimensionError("model expects input [N, 3, " + std::to_string(s) + ", " + std::to_string(s) + "], got " +
                         ad::to_string(shape));

  V x = ad::relu(conv(tape, input, "stem", 2, 3));
  x = ad::pool(x, ad::PoolMode::max, 2, 2);
  Maps c;
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < cfg_.stage_blocks[stage]; ++b) {
      const std::string block = "stage" + std::to_string(stage + 2) + ".block" + std::to_string(b);
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      V h = ad::relu(conv(tape, x, block + ".conv1", 1, 0));
      h = ad::relu(conv(tape, h, block + ".conv2", stride, 1));
      h = conv(tape, h, block + ".conv3", 1, 0);
      const V shortcut = b == 0 ? conv(tape, x, block + ".proj", stride, 0) : x;
      x = ad::relu(ad::add(h, shortcut));
    }
    c[stage] = x;
  }
  return c;
}

template <typename T>
typename Maeiqa<T>::Maps Maeiqa<T>::top_down(ad::Tape<T>& tape, const Maps& c) const {
  Maps p;
  p[3] = conv(tape, c[3], level_name("td.lateral", 5), 1, 0);
  for (int i = 2; i >= 0; --i) {
    const int h = static_cast<int>(c[i].shape()[2]);
    const int wd = static_cast<int>(c[i].shape()[3]);
    p[i] = ad::add(ad::upsample_bilinear(p[i + 1], h, wd), conv(tape, c[i], level_name("td.lateral", i + 2), 1, 0));
  }
  return p;
}

template <typename T>
typename Maeiqa<T>::Pyramid Maeiqa<T>::bottom_up(ad::Tape<T>& tape, const Maps& p) const {
  Pyramid out;
  out.n[0] = p[0];
  for (int i = 1; i < 4; ++i)
    out.n[i] = ad::add(conv(tape, out.n[i - 1], level_name("bu.down", i + 2), 2, 1), p[i]);
  const int side = static_cast<int>(p[cfg_.fuse_level - 2].shape()[2]);
  out.fused = resize_to(out.n[0], side);
  for (int i = 1; i < 4; ++i) out.fused = ad::add(out.fused, resize_to(out.n[i], side));
  return out;
}

template <typename T>
typename Maeiqa<T>::Attended Maeiqa<T>::channel_attention(ad::Tape<T>& tape, const V& features) const {
  const auto& shape = features.shape();
  if (shape.size() != 4) throw DimensionError("channel attention expects a 4-D map, got " + ad::to_string(shape));
  const ad::Shape flat{shape[0], shape[1]};
  auto mlp = [&](const V& v) {
    const V h = ad::relu(ad::linear(v, w(tape, "ea.mlp1.weight"), w(tape, "ea.mlp1.bias")));
    return ad::linear(h, w(tape, "ea.mlp2.weight"), w(tape, "ea.mlp2.bias"));
  };
  const V avg = ad::reshape(ad::pool(features, ad::PoolMode::global_avg), flat);
  const V mx = ad::reshape(ad::pool(features, ad::PoolMode::global_max), flat);
  const V mask = ad::reshape(ad::sigmoid(ad::add(mlp(avg), mlp(mx))), ad::Shape{shape[0], shape[1], 1, 1});
  return {mask, ad::mul(features, mask)};
}

template <typename T>
typename Maeiqa<T>::Attended Maeiqa<T>::spatial_attention(ad::Tape<T>& tape, const V& features) const {
  const auto& shape = features.shape();
  if (shape.size() != 4) throw DimensionError("spatial attention expects a 4-D map, got " + ad::to_string(shape));
  const std::array<V, 2> pooled{ad::reduce_channel(features, ad::ChannelReduce::avg),
                                ad::reduce_channel(features, ad::ChannelReduce::max)};
  const V stacked = ad::concat_channels<T>(pooled);
  const V mask = ad::sigmoid(conv(tape, stacked, "ea.spatial", 1, 3));
  return {mask, ad::mul(features, mask)};
}

template <typename T>
typename Maeiqa<T>::V Maeiqa<T>::head(ad::Tape<T>& tape, const V& features) const {
  const auto& shape = features.shape();
  const std::size_t flat = shape[1] * shape[2] * shape[3];
  const V x = ad::reshape(features, ad::Shape{shape[0], flat});
  const V h = ad::relu(ad::linear(x, w(tape, "head.fc1.weight"), w(tape, "head.fc1.bias")));
  return ad::linear(h, w(tape, "head.fc2.weight"), w(tape, "head.fc2.bias"));
}

template <typename T>
typename Maeiqa<T>::Forward Maeiqa<T>::forward(ad::Tape<T>& tape, const V& input) const {
  Forward f;
  f.c = extract_stages(tape, input);
  if (cfg_.enable_ms) {
    f.p = top_down(tape, f.c);
    auto pyramid = bottom_up(tape, f.p);
    f.n = pyramid.n;
    f.encoded = pyramid.fused;
  } else {
    f.encoded = f.c[3];
  }
  f.head_input = f.encoded;
  if (cfg_.enable_ea) {
    f.channel = channel_attention(tape, f.encoded);
    f.spatial = spatial_attention(tape, f.channel.out);
    f.head_input = f.spatial.out;
  }
  f.score = head(tape, f.head_input);
  return f;
}

template <typename T>
std::vector<double> Maeiqa<T>::predict(std::span<const ImageBuf> images) const {
  std::vector<double> scores(images.size());
  const std::size_t batches = (images.size() + kPredictBatch - 1) / kPredictBatch;
  parallel_for(batches, [&](std::size_t b) {
    const std::size_t lo = b * kPredictBatch;
    const std::size_t n = std::min(kPredictBatch, images.size() - lo);
    ad::Tape<T> tape;
    const V input = tape.constant(images_to_input<T>(images.subspan(lo, n), cfg_.input_size));
    const auto out = forward(tape, input).score.value();
    for (std::size_t i = 0; i < n; ++i) scores[lo + i] = static_cast<double>(out[i]);
  });
  return scores;
}

template <typename T>
double Maeiqa<T>::predict(const ImageBuf& image) const {
  return predict(std::span<const ImageBuf>(&image, 1)).front();
}

template ad::Tensor<float> images_to_input<float>(std::span<const ImageBuf>, int);
template ad::Tensor<double> images_to_input<double>(std::span<const ImageBuf>, int);
template class Maeiqa<float>;
template class Maeiqa<double>;

}  // namespace epd::net
