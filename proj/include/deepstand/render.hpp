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

#ifndef DEEPSTAND_RENDER_HPP_
#define DEEPSTAND_RENDER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "deepstand/density.hpp"
#include "deepstand/image.hpp"
#include "deepstand/postprocess.hpp"

namespace deepstand {

/// Piecewise-linear "jet": 0 -> dark blue, 0.5 -> green, 1 -> dark red.
inline std::array<float, 3> jet(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto ch = [t](double c) { return static_cast<float>(std::clamp(1.5 - std::abs(4.0 * t - c), 0.0, 1.0)); };
  return {ch(3.0), ch(2.0), ch(1.0)};
}

/// Density map as an RGB heatmap, normalized by the map's own maximum.
inline Image render_heatmap(const DensityMap& map) {
  Image out(3, map.height(), map.width());
  const double peak = map.max();
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const auto rgb = jet(peak > 0.0 ? map.at(y, x) / peak : 0.0);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = rgb[c];
    }
  return out;
}

/// Copy of the image with 1-pixel box outlines.
inline Image render_overlay(const Image& image, const std::vector<BoundingBox>& boxes,
                            std::array<float, 3> color = {1.0f, 0.1f, 0.1f}) {
  Image out = image;
  if (out.channels == 1) {
    Image rgb(3, out.height, out.width);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) rgb.at(c, y, x) = out.at(0, y, x);
    out = std::move(rgb);
  }
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
    for (int c = 0; c < 3; ++c) out.at(c, y, x) = color[c];
  };
  for (const auto& b : boxes) {
    const int l = static_cast<int>(std::floor(b.left())), r = static_cast<int>(std::ceil(b.right())) - 1;
    const int t = static_cast<int>(std::floor(b.top())), btm = static_cast<int>(std::ceil(b.bottom())) - 1;
    for (int x = l; x <= r; ++x) {
      put(x, t);
      put(x, btm);
    }
    for (int y = t; y <= btm; ++y) {
      put(l, y);
      put(r, y);
    }
  }
  return out;
}

}  // namespace deepstand

#endif  // DEEPSTAND_RENDER_HPP_
