#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epdkit/autodiff/tape.hpp"
#include "epdkit/core/image.hpp"
#include "epdkit/net/config.hpp"

namespace epd::net {

// Packs images into an [N, 3, S, S] tensor centred around zero (v - 0.5).
// Throws DimensionError when any image is not S x S.
template <typename T>
ad::Tensor<T> images_to_input(std::span<const ImageBuf> images, int size);

// Backbone, multi-scale encoder, attention and regression head. Parameters are
// owned here; every forward pass records onto a caller-supplied tape, so the
// model can be evaluated from several threads at once.
template <typename T>
class Maeiqa {
 public:
  using V = ad::Var<T>;
  using Maps = std::array<V, 4>;  // levels 2..5

  struct Pyramid {
    Maps n;
    V fused;  // F_E
  };
  struct Attended {
    V mask;  // M_c [N, C, 1, 1] or M_s [N, 1, H, W]
    V out;   // F' or F_A
  };
  struct Forward {
    Maps c, p, n;  // p and n stay invalid when MS is off
    V encoded;     // F_E with MS, C5 without
    Attended channel, spatial;  // invalid when EA is off
    V head_input;
    V score;  // [N, 1]
  };

  // He-style random initialization from `seed`.
  Maeiqa(ModelConfig cfg, std::uint64_t seed);
  // Every parameter zero.
  static Maeiqa zeros(ModelConfig cfg);

  Maeiqa(Maeiqa&&) noexcept = default;
  Maeiqa& operator=(Maeiqa&&) noexcept = default;

  const ModelConfig& config() const noexcept { return cfg_; }
  std::vector<ad::Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<ad::Parameter<T>>& parameters() const noexcept { return params_; }
  std::vector<ad::Parameter<T>*> parameter_ptrs();
  // Throws RangeError for unknown names.
  ad::Parameter<T>& param(std::string_view name);
  const ad::Parameter<T>& param(std::string_view name) const;
  std::size_t parameter_count() const;

  Maps extract_stages(ad::Tape<T>& tape, const V& input) const;
  Maps top_down(ad::Tape<T>& tape, const Maps& c) const;
  Pyramid bottom_up(ad::Tape<T>& tape, const Maps& p) const;
  Attended channel_attention(ad::Tape<T>& tape, const V& features) const;
  Attended spatial_attention(ad::Tape<T>& tape, const V& features) const;
  V head(ad::Tape<T>& tape, const V& features) const;
  Forward forward(ad::Tape<T>& tape, const V& input) const;

  // Inference in fixed-size batches; deterministic regardless of thread count.
  std::vector<double> predict(std::span<const ImageBuf> images) const;
  double predict(const ImageBuf& image) const;

 private:
  explicit Maeiqa(ModelConfig cfg);
  V w(ad::Tape<T>& tape, const std::string& name) const;
  V conv(ad::Tape<T>& tape, const V& x, const std::string& name, int stride, int padding) const;

  ModelConfig cfg_;
  std::vector<ad::Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

extern template class Maeiqa<float>;
extern template class Maeiqa<double>;

}  // namespace epd::net
