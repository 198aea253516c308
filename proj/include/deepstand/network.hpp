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

#ifndef DEEPSTAND_NETWORK_HPP_
#define DEEPSTAND_NETWORK_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "deepstand/density.hpp"
#include "deepstand/ops.hpp"

namespace deepstand {

/// Architecture description. Every layer shape is a pure function of it.
struct NetConfig {
  int input_height = 304;
  int input_width = 304;
  double width_multiplier = 1.0;
  std::vector<int> tap_blocks{3, 4, 5};
  std::array<int, 3> deconv_kernels{4, 4, 4};
  /// Channels of the post-merge fusion conv; 0 means ceil(256 * width).
  int head_channels = 0;
  /// Output channels of the three deconvs; 0 entries mean ceil({128,64,32} * width).
  std::array<int, 3> deconv_channels{0, 0, 0};

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// VGG-16 conv plan, per block.
inline const std::array<std::vector<int>, 5>& vgg16_blocks() {
  static const std::array<std::vector<int>, 5> plan{
      std::vector<int>{64, 64}, std::vector<int>{128, 128}, std::vector<int>{256, 256, 256},
      std::vector<int>{512, 512, 512}, std::vector<int>{512, 512, 512}};
  return plan;
}

/// Blocks followed by a 2x2 max-pool; three pools put the deepest map at 1/8.
inline bool block_has_pool(int block) { return block <= 3; }

inline int scaled_width(int base, double multiplier) {
  return std::max(1, static_cast<int>(std::ceil(base * multiplier - 1e-9)));
}

inline int head_channels(const NetConfig& cfg) {
  return cfg.head_channels > 0 ? cfg.head_channels : scaled_width(256, cfg.width_multiplier);
}

inline int deconv_channels(const NetConfig& cfg, int i) {
  static constexpr std::array<int, 3> base{128, 64, 32};
  return cfg.deconv_channels[i] > 0 ? cfg.deconv_channels[i]
                                    : scaled_width(base[i], cfg.width_multiplier);
}

inline void validate(const NetConfig& cfg) {
  require(cfg.input_height >= 8 && cfg.input_width >= 8 && cfg.input_height % 8 == 0 &&
              cfg.input_width % 8 == 0,
          "input size must be a positive multiple of 8, got " + std::to_string(cfg.input_height) +
              "x" + std::to_string(cfg.input_width));
  require(cfg.width_multiplier > 0.0 && cfg.width_multiplier <= 1.0,
          "width_multiplier must lie in (0, 1]");
  require(cfg.width_multiplier * 64.0 >= 1.0, "width_multiplier * 64 must be >= 1");
  require(!cfg.tap_blocks.empty(), "tap_blocks must not be empty");
  for (std::size_t i = 0; i < cfg.tap_blocks.size(); ++i) {
    require(cfg.tap_blocks[i] >= 1 && cfg.tap_blocks[i] <= 5, "tap block indices lie in 1..5");
    require(i == 0 || cfg.tap_blocks[i] > cfg.tap_blocks[i - 1],
            "tap_blocks must be strictly increasing");
  }
  for (int k : cfg.deconv_kernels) require(k >= 2, "deconv kernels must be >= 2 (stride 2)");
  require(cfg.head_channels >= 0, "head_channels must be >= 0");
  for (int c : cfg.deconv_channels) require(c >= 0, "deconv_channels must be >= 0");
}

enum class LayerKind { kConv, kDeconv };

/// Kernel plus bias for one layer.
template <typename T>
struct Layer {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  Var<T> kernel;
  Var<T> bias;
};

/// Layer shape plan derived from a NetConfig.
struct LayerSpec {
  std::string name;
  LayerKind kind;
  Shape kernel_shape;
};

inline std::vector<LayerSpec> layer_plan(const NetConfig& cfg) {
  validate(cfg);
  std::vector<LayerSpec> plan;
  std::size_t in = 3;
  std::size_t merged = 0;
  for (int b = 1; b <= 5; ++b) {
    const auto& block = vgg16_blocks()[b - 1];
    for (std::size_t l = 0; l < block.size(); ++l) {
      const std::size_t out = scaled_width(block[l], cfg.width_multiplier);
      plan.push_back({"conv" + std::to_string(b) + "_" + std::to_string(l + 1), LayerKind::kConv,
                      {out, in, 3, 3}});
      in = out;
    }
    if (std::find(cfg.tap_blocks.begin(), cfg.tap_blocks.end(), b) != cfg.tap_blocks.end())
      merged += in;
  }
  const std::size_t head = head_channels(cfg);
  plan.push_back({"fuse", LayerKind::kConv, {head, merged, 3, 3}});
  in = head;
  for (int i = 0; i < 3; ++i) {
    const std::size_t out = deconv_channels(cfg, i);
    const std::size_t k = cfg.deconv_kernels[i];
    plan.push_back({"deconv" + std::to_string(i + 1), LayerKind::kDeconv, {in, out, k, k}});
    in = out;
  }
  plan.push_back({"output", LayerKind::kConv, {1, in, 1, 1}});
  return plan;
}

/// Ordered layer list; names and shapes follow layer_plan(config).
template <typename T>
struct NetworkParams {
  std::vector<Layer<T>> layers;

  const Layer<T>& layer(const std::string& name) const {
    for (const auto& l : layers)
      if (l.name == name) return l;
    throw UsageError("no layer named '" + name + "'");
  }

  std::vector<Var<T>> tensors() const {
    std::vector<Var<T>> out;
    for (const auto& l : layers) {
      out.push_back(l.kernel);
      out.push_back(l.bias);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.kernel->value.size() + l.bias->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& l : layers) {
      l.kernel->zero_grad();
      l.bias->zero_grad();
    }
  }

  /// Deep copy in another precision.
  template <typename U>
  NetworkParams<U> cast() const {
    NetworkParams<U> out;
    for (const auto& l : layers)
      out.layers.push_back({l.name, l.kind, make_var(l.kernel->value.template cast<U>(), true),
                            make_var(l.bias->value.template cast<U>(), true)});
    return out;
  }
};

/// Checks that params match the plan of cfg exactly.
template <typename T>
void validate_params(const NetworkParams<T>& params, const NetConfig& cfg) {
  const auto plan = layer_plan(cfg);
  if (plan.size() != params.layers.size()) {
    throw DataError("parameter set has " + std::to_string(params.layers.size()) +
                    " layers, config expects " + std::to_string(plan.size()));
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& l = params.layers[i];
    const std::size_t bias_len =
        plan[i].kind == LayerKind::kConv ? plan[i].kernel_shape[0] : plan[i].kernel_shape[1];
    if (l.name != plan[i].name || l.kernel->value.shape() != plan[i].kernel_shape ||
        l.bias->value.shape() != Shape{bias_len}) {
      throw DataError("layer " + std::to_string(i) + " ('" + l.name + "') does not match config (" +
                      plan[i].name + " " + shape_str(plan[i].kernel_shape) + ")");
    }
  }
}

/// Xavier-uniform weights from seed, zero biases.
template <typename T>
NetworkParams<T> build_network(const NetConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NetworkParams<T> params;
  for (const auto& layer : layer_plan(cfg)) {
    const Shape& s = layer.kernel_shape;
    const double fan = static_cast<double>((s[0] + s[1]) * s[2] * s[3]);
    const double limit = std::sqrt(6.0 / fan);
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor<T> kernel(s);
    for (auto& v : kernel.data()) v = static_cast<T>(dist(rng));
    const std::size_t bias_len = layer.kind == LayerKind::kConv ? s[0] : s[1];
    params.layers.push_back({layer.name, layer.kind, make_var(std::move(kernel), true),
                             make_var(Tensor<T>({bias_len}), true)});
  }
  return params;
}

/// Activation kept for each tap, in tap order.
template <typename T>
struct ForwardTrace {
  std::vector<Var<T>> taps;
  Var<T> merged;
  Var<T> output;
};

/// Density-map forward pass. Input N,3,H,W with H,W multiples of 8; output
/// N,1,H,W, nonnegative.
template <typename T>
Var<T> forward(Graph<T>& graph, const NetworkParams<T>& params, const NetConfig& cfg,
               const Var<T>& image, ForwardTrace<T>* trace = nullptr) {
  const Shape& xs = image->value.shape();
  require(xs.size() == 4 && xs[1] == 3, "forward expects an N,3,H,W image, got " + shape_str(xs));
  require(xs[2] % 8 == 0 && xs[3] % 8 == 0,
          "forward: spatial extent " + std::to_string(xs[2]) + "x" + std::to_string(xs[3]) +
              " is not divisible by 8");
  const auto plan = layer_plan(cfg);
  validate_params(params, cfg);

  std::size_t li = 0;
  auto conv = [&](const Var<T>& x, Padding pad) {
    const Layer<T>& l = params.layers[li++];
    return conv2d(graph, x, l.kernel, l.bias, 1, pad);
  };

  Var<T> x = image;
  std::vector<Var<T>> taps;
  for (int b = 1; b <= 5; ++b) {
    for (std::size_t l = 0; l < vgg16_blocks()[b - 1].size(); ++l)
      x = relu(graph, conv(x, Padding::kSame));
    if (block_has_pool(b)) x = maxpool2d(graph, x, 2, 2);
    if (std::find(cfg.tap_blocks.begin(), cfg.tap_blocks.end(), b) != cfg.tap_blocks.end())
      taps.push_back(x);
  }

  std::size_t th = 0, tw = 0;
  for (const auto& t : taps) {
    th = std::max(th, t->value.dim(2));
    tw = std::max(tw, t->value.dim(3));
  }
  for (auto& t : taps) {
    if (t->value.dim(2) != th || t->value.dim(3) != tw) t = zero_pad_spatial(graph, t, th, tw);
  }
  Var<T> merged = taps.size() == 1 ? taps.front() : concat_channels(graph, taps);
  x = relu(graph, conv(merged, Padding::kSame));

  // First up-sampling uses valid padding, then a centered crop to exactly 2x.
  const std::size_t base_h = xs[2] / 8, base_w = xs[3] / 8;
  {
    const Layer<T>& l = params.layers[li++];
    x = deconv2d(graph, x, l.kernel, l.bias, 2, Padding::kValid);
    const std::size_t top = (x->value.dim(2) - 2 * base_h) / 2;
    const std::size_t left = (x->value.dim(3) - 2 * base_w) / 2;
    x = relu(graph, crop_spatial(graph, x, top, left, 2 * base_h, 2 * base_w));
  }
  for (int i = 0; i < 2; ++i) {
    const Layer<T>& l = params.layers[li++];
    x = relu(graph, deconv2d(graph, x, l.kernel, l.bias, 2, Padding::kSame));
  }
  x = relu(graph, conv(x, Padding::kSame));

  if (trace) *trace = {taps, merged, x};
  return x;
}

/// Inference without gradient tracking.
template <typename T>
Tensor<T> predict_density(const NetworkParams<T>& params, const NetConfig& cfg,
                          const Tensor<T>& image) {
  Graph<T> graph;
  return forward(graph, params, cfg, make_var(image))->value;
}

/// Integral of the predicted density for a single image (N must be 1).
template <typename T>
double predict_count(const NetworkParams<T>& params, const NetConfig& cfg, const Tensor<T>& image) {
  require(image.rank() == 4 && image.dim(0) == 1, "predict_count expects a single image");
  const Tensor<T> out = predict_density(params, cfg, image);
  double s = 0.0;
  for (T v : out.data()) s += static_cast<double>(v);
  return s;
}

/// First item, channel 0 of an N,1,H,W prediction as a density map.
template <typename T>
DensityMap to_density_map(const Tensor<T>& prediction, std::size_t item = 0) {
  require(prediction.rank() == 4 && prediction.dim(1) == 1, "expected an N,1,H,W tensor");
  const std::size_t h = prediction.dim(2), w = prediction.dim(3);
  std::vector<double> grid(h * w);
  for (std::size_t i = 0; i < h * w; ++i) grid[i] = static_cast<double>(prediction[item * h * w + i]);
  return DensityMap(static_cast<int>(h), static_cast<int>(w), std::move(grid));
}

}  // namespace deepstand

#endif  // DEEPSTAND_NETWORK_HPP_
