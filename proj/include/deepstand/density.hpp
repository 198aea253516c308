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

#ifndef DEEPSTAND_DENSITY_HPP_
#define DEEPSTAND_DENSITY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "deepstand/core.hpp"

namespace deepstand {

/// Continuous pixel coordinates: pixel (i, j) covers [j, j+1) x [i, i+1)
/// and its center sits at (j + 0.5, i + 0.5).
struct Point {
  double x = 0.0;  // column
  double y = 0.0;  // row
  friend bool operator==(const Point&, const Point&) = default;
};

/// Object centers for one image plus its class tag (growth-stage analogue).
struct PointAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::string class_tag;
  std::vector<Point> points;

  std::size_t count() const noexcept { return points.size(); }
  friend bool operator==(const PointAnnotation&, const PointAnnotation&) = default;
};

inline bool point_in_bounds(const Point& p, int width, int height) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < width && p.y < height;
}

/// Throws DataError naming the image and offending point index.
inline void validate_annotation(const PointAnnotation& ann) {
  if (ann.width < 1 || ann.height < 1) {
    throw DataError("annotation '" + ann.image_id + "': invalid image size");
  }
  for (std::size_t i = 0; i < ann.points.size(); ++i) {
    const Point& p = ann.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !point_in_bounds(p, ann.width, ann.height)) {
      throw DataError("annotation '" + ann.image_id + "': point " + std::to_string(i) + " (" +
                      std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") lies outside the " + std::to_string(ann.width) + "x" +
                      std::to_string(ann.height) + " image");
    }
  }
}

/// Nonnegative H x W grid whose sum is the object count.
class DensityMap {
 public:
  DensityMap() = default;
  DensityMap(int height, int width, double fill = 0.0)
      : height_(height), width_(width),
        grid_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill) {
    require(height >= 1 && width >= 1, "density map extents must be >= 1");
  }
  DensityMap(int height, int width, std::vector<double> grid)
      : height_(height), width_(width), grid_(std::move(grid)) {
    require(height >= 1 && width >= 1, "density map extents must be >= 1");
    require(grid_.size() == static_cast<std::size_t>(height) * width,
            "density map grid size mismatch");
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return grid_.size(); }

  double& at(int y, int x) { return grid_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return grid_[static_cast<std::size_t>(y) * width_ + x]; }
  std::vector<double>& values() noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return grid_; }

  double max() const { return grid_.empty() ? 0.0 : *std::max_element(grid_.begin(), grid_.end()); }

  friend bool operator==(const DensityMap&, const DensityMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> grid_;
};

/// Gaussian bandwidth selection.
struct FixedSigma {
  double sigma = 4.0;
};
/// sigma_i = scale * mean distance from point i to its k nearest neighbors.
/// Falls back to a fixed bandwidth when fewer than k+1 points exist.
struct KnnSigma {
  int k = 3;
  double scale = 0.3;
  double fallback_sigma = 4.0;
};
using SigmaMode = std::variant<FixedSigma, KnnSigma>;

/// Kernel support radius in units of sigma.
inline constexpr double kTruncationRadius = 4.0;

/// Per-point bandwidths under the given mode.
inline std::vector<double> point_sigmas(const std::vector<Point>& points, const SigmaMode& mode) {
  std::vector<double> sigmas(points.size());
  if (const auto* fixed = std::get_if<FixedSigma>(&mode)) {
    require(fixed->sigma > 0.0, "sigma must be positive");
    std::fill(sigmas.begin(), sigmas.end(), fixed->sigma);
    return sigmas;
  }
  const auto& knn = std::get<KnnSigma>(mode);
  require(knn.k >= 1, "knn sigma requires k >= 1");
  require(knn.scale > 0.0 && knn.fallback_sigma > 0.0, "sigma must be positive");
  const std::size_t k = static_cast<std::size_t>(knn.k);
  if (points.size() < k + 1) {
    std::fill(sigmas.begin(), sigmas.end(), knn.fallback_sigma);
    return sigmas;
  }
  std::vector<double> dist(points.size() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      dist[m++] = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) mean += dist[j];
    mean /= static_cast<double>(k);
    // Coincident points would give sigma 0; keep the kernel well-defined.
    sigmas[i] = mean > 0.0 ? knn.scale * mean : knn.fallback_sigma;
  }
  return sigmas;
}

/// Adds one unit-mass, 4-sigma-truncated Gaussian centered at p. The kernel is
/// renormalized over its in-image support so exactly 1 is deposited.
inline void splat_gaussian(DensityMap& map, const Point& p, double sigma) {
  const double radius = kTruncationRadius * sigma;
  const int y0 = std::max(0, static_cast<int>(std::floor(p.y - radius - 0.5)));
  const int y1 = std::min(map.height() - 1, static_cast<int>(std::ceil(p.y + radius - 0.5)));
  const int x0 = std::max(0, static_cast<int>(std::floor(p.x - radius - 0.5)));
  const int x1 = std::min(map.width() - 1, static_cast<int>(std::ceil(p.x + radius - 0.5)));
  const double r2 = radius * radius;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const int kw = x1 - x0 + 1;
  std::vector<double> kernel(static_cast<std::size_t>(std::max(0, y1 - y0 + 1)) * std::max(0, kw), 0.0);
  double mass = 0.0;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y + 0.5 - p.y;
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - p.x;
      const double d2 = dx * dx + dy * dy;
      if (d2 > r2) continue;
      const double v = std::exp(-d2 * inv);
      kernel[static_cast<std::size_t>(y - y0) * kw + (x - x0)] = v;
      mass += v;
    }
  }
  if (mass <= 0.0) {
    map.at(static_cast<int>(p.y), static_cast<int>(p.x)) += 1.0;
    return;
  }
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      map.at(y, x) += kernel[static_cast<std::size_t>(y - y0) * kw + (x - x0)] / mass;
}

/// Ground-truth density: a sum of unit-mass Gaussians, one per annotated
/// point, so the map integrates to the point count.
inline DensityMap generate_density_map(const std::vector<Point>& points, int height, int width,
                                       const SigmaMode& mode) {
  require(height >= 1 && width >= 1, "density map extents must be >= 1");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!point_in_bounds(points[i], width, height)) {
      throw DataError("point " + std::to_string(i) + " lies outside the " +
                      std::to_string(width) + "x" + std::to_string(height) + " grid");
    }
  }
  DensityMap map(height, width);
  const std::vector<double> sigmas = point_sigmas(points, mode);
  for (std::size_t i = 0; i < points.size(); ++i) splat_gaussian(map, points[i], sigmas[i]);
  return map;
}

inline DensityMap generate_density_map(const PointAnnotation& ann, int height, int width,
                                       const SigmaMode& mode) {
  return generate_density_map(ann.points, height, width, mode);
}

/// Integral of the map; not rounded.
inline double count_from_density(const DensityMap& map) {
  double s = 0.0;
  for (double v : map.values()) s += v;
  return s;
}

/// Block-sum pooling by an integer factor; preserves the total.
inline DensityMap downsample_density(const DensityMap& map, int factor) {
  require(factor >= 1, "downsample factor must be >= 1");
  require(map.height() % factor == 0 && map.width() % factor == 0,
          "downsample factor " + std::to_string(factor) + " does not divide " +
              std::to_string(map.height()) + "x" + std::to_string(map.width()));
  if (factor == 1) return map;
  DensityMap out(map.height() / factor, map.width() / factor);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) out.at(y / factor, x / factor) += map.at(y, x);
  return out;
}

}  // namespace deepstand

#endif  // DEEPSTAND_DENSITY_HPP_
