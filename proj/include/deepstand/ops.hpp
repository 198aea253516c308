// Copyright 2026 The DeepStand Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEEPSTAND_OPS_HPP_
#define DEEPSTAND_OPS_HPP_

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deepstand/autograd.hpp"

// Differentiable ops for the counting network. Convolutions are
// cross-correlations (kernels are never flipped). Batch items are processed
// independently and per-item weight-gradient partials are summed in batch
// order, so results do not depend on the worker count.

namespace deepstand {

enum class Padding { kSame, kValid };

inline const char* padding_name(Padding p) { return p == Padding::kSame ? "same" : "valid"; }

/// Geometry of a strided window sweep over an in_h x in_w plane.
struct ConvGeometry {
  int in_h = 0, in_w = 0;
  int k_h = 0, k_w = 0;
  int stride = 1;
  int pad_top = 0, pad_left = 0;
  int out_h = 0, out_w = 0;

  int patch() const { return k_h * k_w; }
  int out_size() const { return out_h * out_w; }
};

/// Forward-conv geometry. Same padding follows the usual rule
/// out = ceil(in / stride) with the extra pad split low side first.
inline ConvGeometry conv_geometry(int in_h, int in_w, int k_h, int k_w, int stride, Padding pad) {
  require(stride >= 1, "stride must be >= 1, got " + std::to_string(stride));
  ConvGeometry g{in_h, in_w, k_h, k_w, stride, 0, 0, 0, 0};
  if (pad == Padding::kValid) {
    g.out_h = in_h >= k_h ? (in_h - k_h) / stride + 1 : 0;
    g.out_w = in_w >= k_w ? (in_w - k_w) / stride + 1 : 0;
  } else {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    g.pad_top = std::max((g.out_h - 1) * stride + k_h - in_h, 0) / 2;
    g.pad_left = std::max((g.out_w - 1) * stride + k_w - in_w, 0) / 2;
  }
  require(g.out_h >= 1 && g.out_w >= 1, "convolution output extent < 1");
  return g;
}

/// Geometry of the transposed conv mapping in_h x in_w up to the returned
/// geometry's in_h x in_w (the "input" side of the adjoint forward conv).
inline ConvGeometry deconv_geometry(int in_h, int in_w, int k_h, int k_w, int stride,
                                    Padding pad) {
  require(stride >= 1, "stride must be >= 1, got " + std::to_string(stride));
  ConvGeometry g;
  g.k_h = k_h;
  g.k_w = k_w;
  g.stride = stride;
  g.out_h = in_h;
  g.out_w = in_w;
  if (pad == Padding::kValid) {
    g.in_h = (in_h - 1) * stride + k_h;
    g.in_w = (in_w - 1) * stride + k_w;
  } else {
    g.in_h = in_h * stride;
    g.in_w = in_w * stride;
    g.pad_top = std::max(k_h - stride, 0) / 2;
    g.pad_left = std::max(k_w - stride, 0) / 2;
  }
  return g;
}

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// GEMM operands are staged in maximally aligned buffers; Eigen's product
// rounding depends on operand alignment.
template <typename T>
using AlignedBuf = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
AlignedBuf<T> aligned_copy(const T* src, std::size_t len) {
  return AlignedBuf<T>(src, src + len);
}

/// col[(c*kh+i)*kw+j, oy*ow+ox] = img[c, oy*s-pt+i, ox*s-pl+j] (zero outside).
template <typename T>
void im2col(const T* img, int channels, const ConvGeometry& g, T* col) {
  const int ohw = g.out_size();
  for (int c = 0; c < channels; ++c) {
    const T* plane = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int i = 0; i < g.k_h; ++i) {
      for (int j = 0; j < g.k_w; ++j) {
        T* row = col + static_cast<std::size_t>((c * g.k_h + i) * g.k_w + j) * ohw;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int y = oy * g.stride - g.pad_top + i;
          T* dst = row + oy * g.out_w;
          if (y < 0 || y >= g.in_h) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(y) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int x = ox * g.stride - g.pad_left + j;
            dst[ox] = (x >= 0 && x < g.in_w) ? src[x] : T{0};
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: img += scatter(col). Positions outside the plane drop.
template <typename T>
void col2im(const T* col, int channels, const ConvGeometry& g, T* img) {
  const int ohw = g.out_size();
  for (int c = 0; c < channels; ++c) {
    T* plane = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int i = 0; i < g.k_h; ++i) {
      for (int j = 0; j < g.k_w; ++j) {
        const T* row = col + static_cast<std::size_t>((c * g.k_h + i) * g.k_w + j) * ohw;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int y = oy * g.stride - g.pad_top + i;
          if (y < 0 || y >= g.in_h) continue;
          T* dst = plane + static_cast<std::size_t>(y) * g.in_w;
          const T* src = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int x = ox * g.stride - g.pad_left + j;
            if (x >= 0 && x < g.in_w) dst[x] += src[ox];
          }
        }
      }
    }
  }
}

inline void check_rank4(const Shape& s, const char* what) {
  require(s.size() == 4, std::string(what) + ": expected a rank-4 tensor, got " + shape_str(s));
}

/// Sums per-item partial buffers in item order into dst (dst += sum).
template <typename Buf, typename T>
void reduce_partials(const std::vector<Buf>& partials, T* dst, std::size_t len) {
  for (const auto& p : partials)
    for (std::size_t i = 0; i < len; ++i) dst[i] += p[i];
}

}  // namespace detail

/// 2-D cross-correlation. input N,C,H,W; kernel Cout,C,Kh,Kw; bias Cout.
template <typename T>
Var<T> conv2d(Graph<T>& graph, const Var<T>& input, const Var<T>& kernel, const Var<T>& bias,
              int stride, Padding pad) {
  const Shape& xs = input->value.shape();
  const Shape& ks = kernel->value.shape();
  detail::check_rank4(xs, "conv2d input");
  detail::check_rank4(ks, "conv2d kernel");
  require(ks[1] == xs[1], "conv2d: kernel expects " + std::to_string(ks[1]) +
                              " input channels, input has " + std::to_string(xs[1]));
  require(bias->value.size() == ks[0], "conv2d: bias length must equal output channels");
  const int n = static_cast<int>(xs[0]), cin = static_cast<int>(xs[1]);
  const int cout = static_cast<int>(ks[0]);
  const ConvGeometry g = conv_geometry(static_cast<int>(xs[2]), static_cast<int>(xs[3]),
                                       static_cast<int>(ks[2]), static_cast<int>(ks[3]), stride,
                                       pad);
  const int kdim = cin * g.patch();
  const int ohw = g.out_size();
  const std::size_t in_plane = static_cast<std::size_t>(cin) * g.in_h * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(cout) * ohw;

  Tensor<T> out({xs[0], ks[0], static_cast<std::size_t>(g.out_h), static_cast<std::size_t>(g.out_w)});
  {
    const auto wbuf = detail::aligned_copy(kernel->value.raw(), kernel->value.size());
    const detail::ConstMatMap<T> w(wbuf.data(), cout, kdim);
    const T* b = bias->value.raw();
    parallel_for(n, [&](std::size_t item) {
      detail::AlignedBuf<T> col(static_cast<std::size_t>(kdim) * ohw);
      detail::AlignedBuf<T> ybuf(out_plane);
      detail::im2col(input->value.raw() + item * in_plane, cin, g, col.data());
      detail::MatMap<T> y(ybuf.data(), cout, ohw);
      y.noalias() = w * detail::ConstMatMap<T>(col.data(), kdim, ohw);
      for (int c = 0; c < cout; ++c) y.row(c).array() += b[c];
      std::copy(ybuf.begin(), ybuf.end(), out.raw() + item * out_plane);
    });
  }

  return graph.record(
      "conv2d", {input, kernel, bias}, std::move(out),
      [input, kernel, bias, g, n, cin, cout, kdim, ohw, in_plane, out_plane](Variable<T>& o) {
        const T* gy = o.grad.raw();
        const bool need_w = kernel->requires_grad, need_b = bias->requires_grad;
        const bool need_x = input->requires_grad;
        const std::size_t wlen = static_cast<std::size_t>(cout) * kdim;
        std::vector<detail::AlignedBuf<T>> gw(need_w ? n : 0);
        std::vector<std::vector<T>> gb(need_b ? n : 0);
        const auto wbuf = detail::aligned_copy(kernel->value.raw(), kernel->value.size());
        const detail::ConstMatMap<T> w(wbuf.data(), cout, kdim);
        T* gx = need_x ? input->grad_buffer().raw() : nullptr;
        parallel_for(n, [&](std::size_t item) {
          const auto dybuf = detail::aligned_copy(gy + item * out_plane, out_plane);
          const detail::ConstMatMap<T> dy(dybuf.data(), cout, ohw);
          detail::AlignedBuf<T> col(static_cast<std::size_t>(kdim) * ohw);
          if (need_w) {
            detail::im2col(input->value.raw() + item * in_plane, cin, g, col.data());
            gw[item].resize(wlen);
            detail::MatMap<T>(gw[item].data(), cout, kdim).noalias() =
                dy * detail::ConstMatMap<T>(col.data(), kdim, ohw).transpose();
          }
          if (need_b) {
            gb[item].resize(cout);
            for (int c = 0; c < cout; ++c) {
              T s{0};
              for (int i = 0; i < ohw; ++i) s += dybuf[static_cast<std::size_t>(c) * ohw + i];
              gb[item][c] = s;
            }
          }
          if (need_x) {
            detail::MatMap<T>(col.data(), kdim, ohw).noalias() = w.transpose() * dy;
            detail::col2im(col.data(), cin, g, gx + item * in_plane);
          }
        });
        if (need_w) detail::reduce_partials(gw, kernel->grad_buffer().raw(), wlen);
        if (need_b) detail::reduce_partials(gb, bias->grad_buffer().raw(), cout);
      });
}

/// Transposed convolution, the adjoint of conv2d with the same kernel tensor.
/// input N,Cin,H,W; kernel Cin,Cout,Kh,Kw; bias Cout.
/// Valid: out = (H-1)*stride + Kh. Same: out = H*stride.
template <typename T>
Var<T> deconv2d(Graph<T>& graph, const Var<T>& input, const Var<T>& kernel, const Var<T>& bias,
                int stride, Padding pad) {
  const Shape& xs = input->value.shape();
  const Shape& ks = kernel->value.shape();
  detail::check_rank4(xs, "deconv2d input");
  detail::check_rank4(ks, "deconv2d kernel");
  require(ks[0] == xs[1], "deconv2d: kernel expects " + std::to_string(ks[0]) +
                              " input channels, input has " + std::to_string(xs[1]));
  require(bias->value.size() == ks[1], "deconv2d: bias length must equal output channels");
  const int n = static_cast<int>(xs[0]), cin = static_cast<int>(xs[1]);
  const int cout = static_cast<int>(ks[1]);
  const ConvGeometry g = deconv_geometry(static_cast<int>(xs[2]), static_cast<int>(xs[3]),
                                         static_cast<int>(ks[2]), static_cast<int>(ks[3]), stride,
                                         pad);
  const int cdim = cout * g.patch();
  const int hw = g.out_size();  // input plane of the deconv
  const std::size_t in_plane = static_cast<std::size_t>(cin) * hw;
  const std::size_t out_plane = static_cast<std::size_t>(cout) * g.in_h * g.in_w;

  Tensor<T> out({xs[0], ks[1], static_cast<std::size_t>(g.in_h), static_cast<std::size_t>(g.in_w)});
  {
    const auto wbuf = detail::aligned_copy(kernel->value.raw(), kernel->value.size());
    const detail::ConstMatMap<T> w(wbuf.data(), cin, cdim);
    const T* b = bias->value.raw();
    const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
    parallel_for(n, [&](std::size_t item) {
      detail::AlignedBuf<T> col(static_cast<std::size_t>(cdim) * hw);
      const auto xbuf = detail::aligned_copy(input->value.raw() + item * in_plane, in_plane);
      detail::MatMap<T>(col.data(), cdim, hw).noalias() =
          w.transpose() * detail::ConstMatMap<T>(xbuf.data(), cin, hw);
      T* y = out.raw() + item * out_plane;
      for (int c = 0; c < cout; ++c) std::fill(y + c * plane, y + (c + 1) * plane, b[c]);
      detail::col2im(col.data(), cout, g, y);
    });
  }

  return graph.record(
      "deconv2d", {input, kernel, bias}, std::move(out),
      [input, kernel, bias, g, n, cin, cout, cdim, hw, in_plane, out_plane](Variable<T>& o) {
        const T* gy = o.grad.raw();
        const bool need_w = kernel->requires_grad, need_b = bias->requires_grad;
        const bool need_x = input->requires_grad;
        const std::size_t wlen = static_cast<std::size_t>(cin) * cdim;
        const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
        std::vector<detail::AlignedBuf<T>> gw(need_w ? n : 0);
        std::vector<std::vector<T>> gb(need_b ? n : 0);
        const auto wbuf = detail::aligned_copy(kernel->value.raw(), kernel->value.size());
        const detail::ConstMatMap<T> w(wbuf.data(), cin, cdim);
        T* gx = need_x ? input->grad_buffer().raw() : nullptr;
        parallel_for(n, [&](std::size_t item) {
          const T* dy = gy + item * out_plane;
          detail::AlignedBuf<T> col(static_cast<std::size_t>(cdim) * hw);
          detail::im2col(dy, cout, g, col.data());
          const detail::ConstMatMap<T> dcol(col.data(), cdim, hw);
          if (need_w) {
            const auto xbuf = detail::aligned_copy(input->value.raw() + item * in_plane, in_plane);
            gw[item].resize(wlen);
            detail::MatMap<T>(gw[item].data(), cin, cdim).noalias() =
                detail::ConstMatMap<T>(xbuf.data(), cin, hw) * dcol.transpose();
          }
          if (need_b) {
            gb[item].resize(cout);
            for (int c = 0; c < cout; ++c) {
              T s{0};
              for (std::size_t i = 0; i < plane; ++i) s += dy[c * plane + i];
              gb[item][c] = s;
            }
          }
          if (need_x) {
            detail::AlignedBuf<T> dx(in_plane);
            detail::MatMap<T>(dx.data(), cin, hw).noalias() = w * dcol;
            T* dst = gx + item * in_plane;
            for (std::size_t i = 0; i < in_plane; ++i) dst[i] += dx[i];
          }
        });
        if (need_w) detail::reduce_partials(gw, kernel->grad_buffer().raw(), wlen);
        if (need_b) detail::reduce_partials(gb, bias->grad_buffer().raw(), cout);
      });
}

/// Max pooling; gradient goes to the first maximum in row-major window order.
template <typename T>
Var<T> maxpool2d(Graph<T>& graph, const Var<T>& input, int window = 2, int stride = 2) {
  const Shape& xs = input->value.shape();
  detail::check_rank4(xs, "maxpool2d input");
  require(window >= 1 && stride >= 1, "maxpool2d: window and stride must be >= 1");
  const int h = static_cast<int>(xs[2]), w = static_cast<int>(xs[3]);
  require(h >= window && w >= window,
          "maxpool2d: window " + std::to_string(window) + " exceeds spatial extent " +
              shape_str(xs));
  const int oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  const std::size_t planes = xs[0] * xs[1];
  Tensor<T> out({xs[0], xs[1], static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  std::vector<std::size_t> argmax(out.size());
  const T* x = input->value.raw();
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        std::size_t best = base + static_cast<std::size_t>(oy * stride) * w + ox * stride;
        for (int i = 0; i < window; ++i) {
          for (int j = 0; j < window; ++j) {
            const std::size_t idx = base + static_cast<std::size_t>(oy * stride + i) * w +
                                    ox * stride + j;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        out[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  return graph.record("maxpool2d", {input}, std::move(out),
                      [input, argmax = std::move(argmax)](Variable<T>& o) {
                        T* gx = input->grad_buffer().raw();
                        for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += o.grad[i];
                      });
}

template <typename T>
Var<T> relu(Graph<T>& graph, const Var<T>& input) {
  Tensor<T> out = input->value;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return graph.record("relu", {input}, std::move(out), [input](Variable<T>& o) {
    T* gx = input->grad_buffer().raw();
    const T* x = input->value.raw();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      if (x[i] > T{0}) gx[i] += o.grad[i];
  });
}

/// Concatenates along the channel axis; all inputs must share N,H,W.
template <typename T>
Var<T> concat_channels(Graph<T>& graph, const std::vector<Var<T>>& inputs) {
  require(!inputs.empty(), "concat_channels: no inputs");
  const Shape& s0 = inputs.front()->value.shape();
  detail::check_rank4(s0, "concat_channels input");
  std::size_t channels = 0;
  for (const auto& in : inputs) {
    const Shape& s = in->value.shape();
    detail::check_rank4(s, "concat_channels input");
    require(s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
            "concat_channels: spatial mismatch " + shape_str(s) + " vs " + shape_str(s0) +
                " (pad first)");
    channels += s[1];
  }
  const std::size_t plane = s0[2] * s0[3];
  Tensor<T> out({s0[0], channels, s0[2], s0[3]});
  for (std::size_t n = 0; n < s0[0]; ++n) {
    std::size_t off = n * channels * plane;
    for (const auto& in : inputs) {
      const std::size_t len = in->value.dim(1) * plane;
      const T* src = in->value.raw() + n * len;
      std::copy(src, src + len, out.raw() + off);
      off += len;
    }
  }
  return graph.record("concat_channels", inputs, std::move(out),
                      [inputs, channels, plane](Variable<T>& o) {
                        const std::size_t batch = o.value.dim(0);
                        std::size_t coff = 0;
                        for (const auto& in : inputs) {
                          const std::size_t len = in->value.dim(1) * plane;
                          if (in->requires_grad) {
                            T* gx = in->grad_buffer().raw();
                            for (std::size_t n = 0; n < batch; ++n) {
                              const T* src = o.grad.raw() + n * channels * plane + coff;
                              for (std::size_t i = 0; i < len; ++i) gx[n * len + i] += src[i];
                            }
                          }
                          coff += len;
                        }
                      });
}

/// Places the input at the top-left of a zero target_h x target_w plane.
template <typename T>
Var<T> zero_pad_spatial(Graph<T>& graph, const Var<T>& input, std::size_t target_h,
                        std::size_t target_w) {
  const Shape& xs = input->value.shape();
  detail::check_rank4(xs, "zero_pad_spatial input");
  require(target_h >= xs[2] && target_w >= xs[3],
          "zero_pad_spatial: target " + std::to_string(target_h) + "x" +
              std::to_string(target_w) + " smaller than input " + shape_str(xs));
  const std::size_t planes = xs[0] * xs[1], h = xs[2], w = xs[3];
  Tensor<T> out({xs[0], xs[1], target_h, target_w});
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(input->value.raw() + (p * h + y) * w, w,
                  out.raw() + (p * target_h + y) * target_w);
  return graph.record("zero_pad_spatial", {input}, std::move(out),
                      [input, planes, h, w, target_h, target_w](Variable<T>& o) {
                        T* gx = input->grad_buffer().raw();
                        for (std::size_t p = 0; p < planes; ++p)
                          for (std::size_t y = 0; y < h; ++y)
                            for (std::size_t x = 0; x < w; ++x)
                              gx[(p * h + y) * w + x] +=
                                  o.grad[(p * target_h + y) * target_w + x];
                      });
}

/// Extracts the h x w window starting at (top, left).
template <typename T>
Var<T> crop_spatial(Graph<T>& graph, const Var<T>& input, std::size_t top, std::size_t left,
                    std::size_t h, std::size_t w) {
  const Shape& xs = input->value.shape();
  detail::check_rank4(xs, "crop_spatial input");
  require(h >= 1 && w >= 1 && top + h <= xs[2] && left + w <= xs[3],
          "crop_spatial: window out of range for " + shape_str(xs));
  const std::size_t planes = xs[0] * xs[1], ih = xs[2], iw = xs[3];
  Tensor<T> out({xs[0], xs[1], h, w});
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(input->value.raw() + (p * ih + top + y) * iw + left, w,
                  out.raw() + (p * h + y) * w);
  return graph.record("crop_spatial", {input}, std::move(out),
                      [input, planes, ih, iw, top, left, h, w](Variable<T>& o) {
                        T* gx = input->grad_buffer().raw();
                        for (std::size_t p = 0; p < planes; ++p)
                          for (std::size_t y = 0; y < h; ++y)
                            for (std::size_t x = 0; x < w; ++x)
                              gx[(p * ih + top + y) * iw + left + x] += o.grad[(p * h + y) * w + x];
                      });
}

/// Sum of all elements as a scalar.
template <typename T>
Var<T> sum(Graph<T>& graph, const Var<T>& input) {
  Tensor<T> out({1}, input->value.sum());
  return graph.record("sum", {input}, std::move(out), [input](Variable<T>& o) {
    T* gx = input->grad_buffer().raw();
    for (std::size_t i = 0; i < input->value.size(); ++i) gx[i] += o.grad[0];
  });
}

/// (1/N) * sum_i ||pred_i - target_i||^2 with N the leading (batch) extent.
template <typename T>
Var<T> sse_loss(Graph<T>& graph, const Var<T>& pred, const Var<T>& target) {
  require(pred->value.shape() == target->value.shape(),
          "sse_loss: shape mismatch " + shape_str(pred->value.shape()) + " vs " +
              shape_str(target->value.shape()));
  const std::size_t batch = pred->value.dim(0);
  const std::size_t per = pred->value.size() / batch;
  T total{0};
  for (std::size_t n = 0; n < batch; ++n) {
    T s{0};
    for (std::size_t i = n * per; i < (n + 1) * per; ++i) {
      const T d = pred->value[i] - target->value[i];
      s += d * d;
    }
    total += s;
  }
  Tensor<T> out({1}, total / static_cast<T>(batch));
  return graph.record("sse_loss", {pred, target}, std::move(out),
                      [pred, target, batch](Variable<T>& o) {
                        const T scale = T{2} * o.grad[0] / static_cast<T>(batch);
                        const std::size_t len = pred->value.size();
                        if (pred->requires_grad) {
                          T* gp = pred->grad_buffer().raw();
                          for (std::size_t i = 0; i < len; ++i)
                            gp[i] += scale * (pred->value[i] - target->value[i]);
                        }
                        if (target->requires_grad) {
                          T* gt = target->grad_buffer().raw();
                          for (std::size_t i = 0; i < len; ++i)
                            gt[i] -= scale * (pred->value[i] - target->value[i]);
                        }
                      });
}

}  // namespace deepstand

#endif  // DEEPSTAND_OPS_HPP_
