#include "epdkit/autodiff/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "epdkit/core/error.hpp"

namespace epd::ad {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
Tape<T>& common_tape(std::initializer_list<const Var<T>*> vars, const char* op) {
  Tape<T>* tape = nullptr;
  for (const Var<T>* v : vars) {
    if (!v->valid()) throw ContractError(std::string(op) + ": unbound argument");
    if (tape == nullptr) {
      tape = &v->tape();
    } else if (tape != &v->tape()) {
      throw ContractError(std::string(op) + ": arguments live on different tapes");
    }
  }
  return *tape;
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got shape " + to_string(s));
  }
}

struct Conv2dDims {
  std::size_t n, c, h, w, k, kh, kw, oh, ow;
  int stride, pad;
  std::size_t patch() const { return c * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const T* x, const Conv2dDims& d, T* col) {
  const auto oh = static_cast<long>(d.oh), ow = static_cast<long>(d.ow);
  const auto h = static_cast<long>(d.h), w = static_cast<long>(d.w);
  for (std::size_t c = 0; c < d.c; ++c) {
    const T* plane = x + c * d.h * d.w;
    for (std::size_t ki = 0; ki < d.kh; ++ki) {
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        T* row = col + ((c * d.kh + ki) * d.kw + kj) * d.pixels();
        for (long oy = 0; oy < oh; ++oy) {
          const long iy = oy * d.stride - d.pad + static_cast<long>(ki);
          T* out = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + ow, T(0));
            continue;
          }
          const T* src = plane + iy * w;
          for (long ox = 0; ox < ow; ++ox) {
            const long ix = ox * d.stride - d.pad + static_cast<long>(kj);
            out[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const Conv2dDims& d, T* x) {
  const auto oh = static_cast<long>(d.oh), ow = static_cast<long>(d.ow);
  const auto h = static_cast<long>(d.h), w = static_cast<long>(d.w);
  for (std::size_t c = 0; c < d.c; ++c) {
    T* plane = x + c * d.h * d.w;
    for (std::size_t ki = 0; ki < d.kh; ++ki) {
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        const T* row = col + ((c * d.kh + ki) * d.kw + kj) * d.pixels();
        for (long oy = 0; oy < oh; ++oy) {
          const long iy = oy * d.stride - d.pad + static_cast<long>(ki);
          if (iy < 0 || iy >= h) continue;
          T* dst = plane + iy * w;
          const T* src = row + oy * ow;
          for (long ox = 0; ox < ow; ++ox) {
            const long ix = ox * d.stride - d.pad + static_cast<long>(kj);
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Strided view of one broadcast operand over the output index space.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> a_stride, b_stride;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b) {
  BroadcastPlan plan;
  plan.out = broadcast_shape(a, b);
  const std::size_t rank = plan.out.size();
  auto strides_for = [&](const Shape& s) {
    std::vector<std::size_t> st(rank, 0);
    std::size_t acc = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t axis = s.size() - 1 - i;
      const std::size_t out_axis = rank - 1 - i;
      st[out_axis] = s[axis] == 1 ? 0 : acc;
      acc *= s[axis];
    }
    return st;
  };
  plan.a_stride = strides_for(a);
  plan.b_stride = strides_for(b);
  return plan;
}

// Calls fn(out_index, a_offset, b_offset) for every output element in order.
template <typename Fn>
void for_each_broadcast(const BroadcastPlan& plan, Fn&& fn) {
  const std::size_t rank = plan.out.size();
  const std::size_t inner = plan.out[rank - 1];
  const std::size_t as = plan.a_stride[rank - 1], bs = plan.b_stride[rank - 1];
  const std::size_t total = element_count(plan.out);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t a_off = 0, b_off = 0;
  for (std::size_t i = 0; i < total; i += inner) {
    for (std::size_t j = 0; j < inner; ++j) fn(i + j, a_off + j * as, b_off + j * bs);
    for (std::size_t axis = rank - 1; axis-- > 0;) {
      ++idx[axis];
      a_off += plan.a_stride[axis];
      b_off += plan.b_stride[axis];
      if (idx[axis] < plan.out[axis]) break;
      a_off -= plan.a_stride[axis] * idx[axis];
      b_off -= plan.b_stride[axis] * idx[axis];
      idx[axis] = 0;
    }
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast " + to_string(a) + " with " + to_string(b) +
                           ": output axis " + std::to_string(rank - 1 - i) + " has " +
                           std::to_string(da) + " vs " + std::to_string(db));
    }
    out[rank - 1 - i] = std::max(da, db);
  }
  return out;
}

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride,
              int padding) {
  Tape<T>& tape = common_tape({&input, &weight, &bias}, "conv2d");
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(xs, 4, "conv2d", "input");
  require_rank(ws, 4, "conv2d", "weight");
  require_rank(bias.shape(), 1, "conv2d", "bias");
  if (stride < 1 || padding < 0) throw RangeError("conv2d: stride must be >= 1 and padding >= 0");
  if (xs[1] != ws[1]) {
    throw DimensionError("conv2d: channel axis 1 mismatch, input has " + std::to_string(xs[1]) +
                         " but weight expects " + std::to_string(ws[1]));
  }
  if (bias.shape()[0] != ws[0]) {
    throw DimensionError("conv2d: bias axis 0 has " + std::to_string(bias.shape()[0]) +
                         ", weight has " + std::to_string(ws[0]) + " output channels");
  }
  const std::size_t ph = xs[2] + 2 * static_cast<std::size_t>(padding);
  const std::size_t pw = xs[3] + 2 * static_cast<std::size_t>(padding);
  if (ws[2] > ph) {
    throw DimensionError("conv2d: kernel height " + std::to_string(ws[2]) +
                         " exceeds padded input axis 2 extent " + std::to_string(ph));
  }
  if (ws[3] > pw) {
    throw DimensionError("conv2d: kernel width " + std::to_string(ws[3]) +
                         " exceeds padded input axis 3 extent " + std::to_string(pw));
  }
  Conv2dDims d{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3],
               (ph - ws[2]) / stride + 1, (pw - ws[3]) / stride + 1, stride, padding};

  Tensor<T> out(Shape{d.n, d.k, d.oh, d.ow});
  const Tensor<T>& x = input.value();
  ConstMatMap<T> wm(weight.value().data(), d.k, d.patch());
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(bias.value().data(), d.k);
  std::vector<T> col(d.pointwise() ? 0 : d.patch() * d.pixels());
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* xn = x.data() + n * d.c * d.h * d.w;
    if (!d.pointwise()) im2col(xn, d, col.data());
    ConstMatMap<T> cm(d.pointwise() ? xn : col.data(), d.patch(), d.pixels());
    MatMap<T> om(out.data() + n * d.k * d.pixels(), d.k, d.pixels());
    om.noalias() = wm * cm;
    om.colwise() += bv;
  }

  const std::size_t xi = input.id(), wi = weight.id(), bi = bias.id();
  return tape.record(std::move(out), {xi, wi, bi}, [d, xi, wi, bi](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(xi);
    ConstMatMap<T> wm(t.value(wi).data(), d.k, d.patch());
    const bool need_x = t.requires_grad(xi);
    const bool need_w = t.requires_grad(wi);
    const bool need_b = t.requires_grad(bi);
    std::vector<T> col(d.pointwise() ? 0 : d.patch() * d.pixels());
    std::vector<T> gcol(need_x && !d.pointwise() ? d.patch() * d.pixels() : 0);
    for (std::size_t n = 0; n < d.n; ++n) {
      ConstMatMap<T> gm(g.data() + n * d.k * d.pixels(), d.k, d.pixels());
      if (need_b) {
        // Plain loop: Eigen's vectorized reductions change summation order
        // with buffer alignment, which breaks run-to-run reproducibility.
        T* gb = t.grad_buffer(bi).data();
        for (std::size_t k = 0; k < d.k; ++k) {
          const T* row = g.data() + (n * d.k + k) * d.pixels();
          T acc = T(0);
          for (std::size_t i = 0; i < d.pixels(); ++i) acc += row[i];
          gb[k] += acc;
        }
      }
      if (need_w) {
        const T* xn = x.data() + n * d.c * d.h * d.w;
        if (!d.pointwise()) im2col(xn, d, col.data());
        ConstMatMap<T> cm(d.pointwise() ? xn : col.data(), d.patch(), d.pixels());
        MatMap<T> gw(t.grad_buffer(wi).data(), d.k, d.patch());
        gw.noalias() += gm * cm.transpose();
      }
      if (need_x) {
        T* gx = t.grad_buffer(xi).data() + n * d.c * d.h * d.w;
        if (d.pointwise()) {
          MatMap<T> gxm(gx, d.c, d.pixels());
          gxm.noalias() += wm.transpose() * gm;
        } else {
          MatMap<T> gc(gcol.data(), d.patch(), d.pixels());
          gc.noalias() = wm.transpose() * gm;
          col2im_add(gcol.data(), d, gx);
        }
      }
    }
  });
}

template <typename T>
Var<T> pool(const Var<T>& input, PoolMode mode, int window, int stride) {
  Tape<T>& tape = common_tape({&input}, "pool");
  const Shape& xs = input.shape();
  require_rank(xs, 4, "pool", "input");
  const std::size_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
  const bool global = mode == PoolMode::global_avg || mode == PoolMode::global_max;
  std::size_t win_h = h, win_w = w, st = 1, oh = 1, ow = 1;
  if (!global) {
    if (window < 1 || stride < 1) throw RangeError("pool: window and stride must be >= 1");
    const auto win = static_cast<std::size_t>(window);
    if (win > h) {
      throw DimensionError("pool: window " + std::to_string(win) + " exceeds axis 2 extent " +
                           std::to_string(h));
    }
    if (win > w) {
      throw DimensionError("pool: window " + std::to_string(win) + " exceeds axis 3 extent " +
                           std::to_string(w));
    }
    win_h = win_w = win;
    st = static_cast<std::size_t>(stride);
    oh = (h - win) / st + 1;
    ow = (w - win) / st + 1;
  }
  const bool is_max = mode == PoolMode::max || mode == PoolMode::global_max;
  const T inv_area = T(1) / static_cast<T>(win_h * win_w);

  Tensor<T> out(Shape{n, c, oh, ow});
  // For max pooling, the flat input index that produced each output.
  std::vector<std::size_t> argmax(is_max ? out.size() : 0);
  const T* x = input.value().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    const T* plane = x + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t o = (p * oh + oy) * ow + ox;
        T acc = is_max ? plane[oy * st * w + ox * st] : T(0);
        std::size_t best = p * h * w + oy * st * w + ox * st;
        for (std::size_t i = 0; i < win_h; ++i) {
          for (std::size_t j = 0; j < win_w; ++j) {
            const std::size_t off = (oy * st + i) * w + ox * st + j;
            if (is_max) {
              if (plane[off] > acc) {
                acc = plane[off];
                best = p * h * w + off;
              }
            } else {
              acc += plane[off];
            }
          }
        }
        out[o] = is_max ? acc : acc * inv_area;
        if (is_max) argmax[o] = best;
      }
    }
  }

  const std::size_t xi = input.id();
  return tape.record(std::move(out), {xi},
                     [=, argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
                       const Tensor<T>& g = t.grad(self);
                       T* gx = t.grad_buffer(xi).data();
                       if (is_max) {
                         for (std::size_t o = 0; o < g.size(); ++o) gx[argmax[o]] += g[o];
                         return;
                       }
                       for (std::size_t p = 0; p < n * c; ++p) {
                         for (std::size_t oy = 0; oy < oh; ++oy) {
                           for (std::size_t ox = 0; ox < ow; ++ox) {
                             const T share = g[(p * oh + oy) * ow + ox] * inv_area;
                             for (std::size_t i = 0; i < win_h; ++i) {
                               T* row = gx + p * h * w + (oy * st + i) * w + ox * st;
                               for (std::size_t j = 0; j < win_w; ++j) row[j] += share;
                             }
                           }
                         }
                       }
                     });
}

template <typename T>
Var<T> reduce_channel(const Var<T>& input, ChannelReduce mode) {
  Tape<T>& tape = common_tape({&input}, "reduce_channel");
  const Shape& xs = input.shape();
  require_rank(xs, 4, "reduce_channel", "input");
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  Tensor<T> out(Shape{n, 1, xs[2], xs[3]});
  std::vector<std::size_t> argmax(mode == ChannelReduce::max ? out.size() : 0);
  const T* x = input.value().data();
  const T inv_c = T(1) / static_cast<T>(c);
  for (std::size_t b = 0; b < n; ++b) {
    const T* xb = x + b * c * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      if (mode == ChannelReduce::max) {
        std::size_t best = 0;
        for (std::size_t ch = 1; ch < c; ++ch) {
          if (xb[ch * hw + p] > xb[best * hw + p]) best = ch;
        }
        out[b * hw + p] = xb[best * hw + p];
        argmax[b * hw + p] = b * c * hw + best * hw + p;
      } else {
        T acc = 0;
        for (std::size_t ch = 0; ch < c; ++ch) acc += xb[ch * hw + p];
        out[b * hw + p] = acc * inv_c;
      }
    }
  }
  const std::size_t xi = input.id();
  return tape.record(std::move(out), {xi},
                     [=, argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
                       const Tensor<T>& g = t.grad(self);
                       T* gx = t.grad_buffer(xi).data();
                       if (mode == ChannelReduce::max) {
                         for (std::size_t o = 0; o < g.size(); ++o) gx[argmax[o]] += g[o];
                         return;
                       }
                       for (std::size_t b = 0; b < n; ++b) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           T* dst = gx + (b * c + ch) * hw;
                           for (std::size_t p = 0; p < hw; ++p) dst[p] += g[b * hw + p] * inv_c;
                         }
                       }
                     });
}

template <typename T>
Var<T> concat_channels(std::span<const Var<T>> parts) {
  if (parts.empty()) throw RangeError("concat_channels: no inputs");
  Tape<T>& tape = common_tape({&parts[0]}, "concat_channels");
  const Shape& first = parts[0].shape();
  require_rank(first, 4, "concat_channels", "input");
  std::size_t total_c = 0;
  std::vector<std::size_t> ids, channels;
  for (const Var<T>& v : parts) {
    if (!v.valid() || &v.tape() != &tape) {
      throw ContractError("concat_channels: arguments live on different tapes");
    }
    const Shape& s = v.shape();
    require_rank(s, 4, "concat_channels", "input");
    for (std::size_t axis : {0u, 2u, 3u}) {
      if (s[axis] != first[axis]) {
        throw DimensionError("concat_channels: axis " + std::to_string(axis) + " mismatch, " +
                             to_string(s) + " vs " + to_string(first));
      }
    }
    total_c += s[1];
    ids.push_back(v.id());
    channels.push_back(s[1]);
  }
  const std::size_t n = first[0], hw = first[2] * first[3];
  Tensor<T> out(Shape{n, total_c, first[2], first[3]});
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const T* src = parts[k].value().data() + b * channels[k] * hw;
      std::copy(src, src + channels[k] * hw, out.data() + (b * total_c + offset) * hw);
      offset += channels[k];
    }
  }
  return tape.record(std::move(out), ids, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        T* dst = t.grad_buffer(ids[k]).data();
        for (std::size_t b = 0; b < n; ++b) {
          const T* src = g.data() + (b * total_c + offset) * hw;
          T* d = dst + b * channels[k] * hw;
          for (std::size_t i = 0; i < channels[k] * hw; ++i) d[i] += src[i];
        }
      }
      offset += channels[k];
    }
  });
}

template <typename T>
Var<T> upsample_bilinear(const Var<T>& input, int out_h, int out_w) {
  Tape<T>& tape = common_tape({&input}, "upsample_bilinear");
  const Shape& xs = input.shape();
  require_rank(xs, 4, "upsample_bilinear", "input");
  if (out_h < 1 || out_w < 1) throw RangeError("upsample_bilinear: output size must be >= 1");
  const std::size_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
  const auto oh = static_cast<std::size_t>(out_h), ow = static_cast<std::size_t>(out_w);

  struct Tap {
    std::size_t i0, i1;
    T frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double src = out > 1 ? static_cast<double>(o) * static_cast<double>(in - 1) /
                                       static_cast<double>(out - 1)
                                 : 0.0;
      auto i0 = static_cast<std::size_t>(std::floor(src));
      i0 = std::min(i0, in - 1);
      const std::size_t i1 = std::min(i0 + 1, in - 1);
      result[o] = {i0, i1, static_cast<T>(src - static_cast<double>(i0))};
    }
    return result;
  };
  const std::vector<Tap> ty = taps(h, oh), tx = taps(w, ow);

  Tensor<T> out(Shape{n, c, oh, ow});
  const T* x = input.value().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    const T* plane = x + p * h * w;
    T* dst = out.data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const Tap& a = ty[oy];
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const Tap& b = tx[ox];
        const T top = plane[a.i0 * w + b.i0] * (T(1) - b.frac) + plane[a.i0 * w + b.i1] * b.frac;
        const T bot = plane[a.i1 * w + b.i0] * (T(1) - b.frac) + plane[a.i1 * w + b.i1] * b.frac;
        dst[oy * ow + ox] = top * (T(1) - a.frac) + bot * a.frac;
      }
    }
  }
  const std::size_t xi = input.id();
  return tape.record(std::move(out), {xi}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    T* gx = t.grad_buffer(xi).data();
    for (std::size_t p = 0; p < n * c; ++p) {
      T* plane = gx + p * h * w;
      const T* src = g.data() + p * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const Tap& a = ty[oy];
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const Tap& b = tx[ox];
          const T v = src[oy * ow + ox];
          plane[a.i0 * w + b.i0] += v * (T(1) - a.frac) * (T(1) - b.frac);
          plane[a.i0 * w + b.i1] += v * (T(1) - a.frac) * b.frac;
          plane[a.i1 * w + b.i0] += v * a.frac * (T(1) - b.frac);
          plane[a.i1 * w + b.i1] += v * a.frac * b.frac;
        }
      }
    }
  });
}

template <typename T>
Var<T> activation(const Var<T>& input, Activation kind) {
  Tape<T>& tape = common_tape({&input}, "activation");
  Tensor<T> out = input.value();
  if (kind == Activation::relu) {
    for (T& v : out.values()) v = v > T(0) ? v : T(0);
  } else {
    // Saturated values are pinned one ulp inside the open interval (0, 1).
    constexpr T lo = std::numeric_limits<T>::min();
    const T hi = std::nextafter(T(1), T(0));
    for (T& v : out.values()) {
      // Split by sign so exp never overflows.
      if (v >= T(0)) {
        v = T(1) / (T(1) + std::exp(-v));
      } else {
        const T e = std::exp(v);
        v = e / (T(1) + e);
      }
      v = std::clamp(v, lo, hi);
    }
  }
  const std::size_t xi = input.id();
  return tape.record(std::move(out), {xi}, [xi, kind](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    T* gx = t.grad_buffer(xi).data();
    if (kind == Activation::relu) {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] > T(0) ? g[i] : T(0);
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
    }
  });
}

template <typename T>
Var<T> linear(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  Tape<T>& tape = common_tape({&input, &weight, &bias}, "linear");
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(xs, 2, "linear", "input");
  require_rank(ws, 2, "linear", "weight");
  require_rank(bias.shape(), 1, "linear", "bias");
  if (xs[1] != ws[0]) {
    throw DimensionError("linear: input axis 1 has " + std::to_string(xs[1]) +
                         " but weight axis 0 has " + std::to_string(ws[0]));
  }
  if (bias.shape()[0] != ws[1]) {
    throw DimensionError("linear: bias axis 0 has " + std::to_string(bias.shape()[0]) +
                         " but weight axis 1 has " + std::to_string(ws[1]));
  }
  const std::size_t n = xs[0], d = xs[1], m = ws[1];
  Tensor<T> out(Shape{n, m});
  ConstMatMap<T> xm(input.value().data(), n, d);
  ConstMatMap<T> wm(weight.value().data(), d, m);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(bias.value().data(), m);
  MatMap<T> om(out.data(), n, m);
  om.noalias() = xm * wm;
  om.rowwise() += bv;

  const std::size_t xi = input.id(), wi = weight.id(), bi = bias.id();
  return tape.record(std::move(out), {xi, wi, bi}, [=](Tape<T>& t, std::size_t self) {
    ConstMatMap<T> gm(t.grad(self).data(), n, m);
    if (t.requires_grad(xi)) {
      MatMap<T> gx(t.grad_buffer(xi).data(), n, d);
      gx.noalias() += gm * ConstMatMap<T>(t.value(wi).data(), d, m).transpose();
    }
    if (t.requires_grad(wi)) {
      MatMap<T> gw(t.grad_buffer(wi).data(), d, m);
      gw.noalias() += ConstMatMap<T>(t.value(xi).data(), n, d).transpose() * gm;
    }
    if (t.requires_grad(bi)) {
      T* gb = t.grad_buffer(bi).data();
      const T* gv = t.grad(self).data();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < m; ++j) gb[j] += gv[r * m + j];
    }
  });
}

template <typename T>
Var<T> elementwise(const Var<T>& a, const Var<T>& b, Binary op) {
  Tape<T>& tape = common_tape({&a, &b}, "elementwise");
  const BroadcastPlan plan = plan_broadcast(a.shape(), b.shape());
  Tensor<T> out(plan.out);
  const T* av = a.value().data();
  const T* bv = b.value().data();
  T* o = out.data();
  if (op == Binary::add) {
    for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      o[i] = av[ia] + bv[ib];
    });
  } else {
    for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      o[i] = av[ia] * bv[ib];
    });
  }
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {ai, bi}, [=](Tape<T>& t, std::size_t self) {
    const T* g = t.grad(self).data();
    const T* av = t.value(ai).data();
    const T* bv = t.value(bi).data();
    if (t.requires_grad(ai)) {
      T* ga = t.grad_buffer(ai).data();
      if (op == Binary::add) {
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t) { ga[ia] += g[i]; });
      } else {
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          ga[ia] += g[i] * bv[ib];
        });
      }
    }
    if (t.requires_grad(bi)) {
      T* gb = t.grad_buffer(bi).data();
      if (op == Binary::add) {
        for_each_broadcast(plan, [&](std::size_t i, std::size_t, std::size_t ib) { gb[ib] += g[i]; });
      } else {
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          gb[ib] += g[i] * av[ia];
        });
      }
    }
  });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
  Tape<T>& tape = common_tape({&pred, &target}, "mse_loss");
  const Tensor<T>& p = pred.value();
  const Tensor<T>& y = target.value();
  require_rank(p.shape(), 1, "mse_loss", "pred");
  require_rank(y.shape(), 1, "mse_loss", "target");
  if (p.size() != y.size()) {
    throw DimensionError("mse_loss: pred axis 0 has " + std::to_string(p.size()) +
                         ", target has " + std::to_string(y.size()));
  }
  const std::size_t n = p.size();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T diff = p[i] - y[i];
    acc += diff * diff;
  }
  const std::size_t pi = pred.id(), yi = target.id();
  return tape.record(Tensor<T>::scalar(acc / static_cast<T>(n)), {pi, yi},
                     [=](Tape<T>& t, std::size_t self) {
                       const T g = t.grad(self)[0];
                       const Tensor<T>& p = t.value(pi);
                       const Tensor<T>& y = t.value(yi);
                       const T scale = T(2) * g / static_cast<T>(n);
                       if (t.requires_grad(pi)) {
                         T* gp = t.grad_buffer(pi).data();
                         for (std::size_t i = 0; i < n; ++i) gp[i] += scale * (p[i] - y[i]);
                       }
                       if (t.requires_grad(yi)) {
                         T* gy = t.grad_buffer(yi).data();
                         for (std::size_t i = 0; i < n; ++i) gy[i] -= scale * (p[i] - y[i]);
                       }
                     });
}

template <typename T>
Var<T> sum(const Var<T>& input) {
  Tape<T>& tape = common_tape({&input}, "sum");
  T acc = 0;
  for (T v : input.value().values()) acc += v;
  const std::size_t xi = input.id();
  return tape.record(Tensor<T>::scalar(acc), {xi}, [xi](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    for (T& v : t.grad_buffer(xi).values()) v += g;
  });
}

template <typename T>
Var<T> reshape(const Var<T>& input, Shape shape) {
  Tape<T>& tape = common_tape({&input}, "reshape");
  Tensor<T> out = input.value().reshaped(std::move(shape));
  const std::size_t xi = input.id();
  return tape.record(std::move(out), {xi}, [xi](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    T* gx = t.grad_buffer(xi).data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

#define EPD_INSTANTIATE_OPS(T)                                                         \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);      \
  template Var<T> pool(const Var<T>&, PoolMode, int, int);                             \
  template Var<T> reduce_channel(const Var<T>&, ChannelReduce);                        \
  template Var<T> concat_channels(std::span<const Var<T>>);                            \
  template Var<T> upsample_bilinear(const Var<T>&, int, int);                          \
  template Var<T> activation(const Var<T>&, Activation);                               \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                \
  template Var<T> elementwise(const Var<T>&, const Var<T>&, Binary);                   \
  template Var<T> mse_loss(const Var<T>&, const Var<T>&);                              \
  template Var<T> sum(const Var<T>&);                                                  \
  template Var<T> reshape(const Var<T>&, Shape);

EPD_INSTANTIATE_OPS(float)
EPD_INSTANTIATE_OPS(double)

#undef EPD_INSTANTIATE_OPS

}  // namespace epd::ad
