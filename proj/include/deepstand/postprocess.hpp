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

#ifndef DEEPSTAND_POSTPROCESS_HPP_
#define DEEPSTAND_POSTPROCESS_HPP_

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "deepstand/density.hpp"

// Density map -> detections: relative threshold, local-maximum peaks,
// fixed-size boxes, greedy NMS.

namespace deepstand {

struct PostConfig {
  /// Values below threshold_ratio * max are zeroed.
  double threshold_ratio = 0.25;
  /// Expected object scale in pixels; drives the derived window and box size.
  double sigma_box = 2.0;
  /// Peak half-window; 0 derives round(2 * sigma_box).
  int peak_window = 0;
  /// Box side; 0 derives 4 * sigma_box.
  double box_size = 0.0;
  double nms_iou = 0.3;

  int window() const {
    return peak_window > 0 ? peak_window : std::max(1, static_cast<int>(std::lround(2.0 * sigma_box)));
  }
  double box() const { return box_size > 0.0 ? box_size : 4.0 * sigma_box; }
};

inline void validate(const PostConfig& cfg) {
  require(cfg.threshold_ratio >= 0.0 && cfg.threshold_ratio < 1.0, "threshold_ratio lies in [0, 1)");
  require(cfg.sigma_box > 0.0, "sigma_box must be positive");
  require(cfg.peak_window >= 0 && cfg.box_size >= 0.0, "peak_window and box_size must be >= 0");
  require(cfg.nms_iou >= 0.0 && cfg.nms_iou < 1.0, "nms_iou lies in [0, 1)");
}

struct Peak {
  int x = 0;
  int y = 0;
  double score = 0.0;
  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Axis-aligned box given by its center and extent, in continuous pixel units.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double score = 0.0;

  double left() const { return x - w / 2; }
  double right() const { return x + w / 2; }
  double top() const { return y - h / 2; }
  double bottom() const { return y + h / 2; }
  double area() const { return w * h; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

/// Zeroes entries below ratio * max(map).
inline DensityMap threshold_map(const DensityMap& map, double ratio) {
  require(ratio >= 0.0 && ratio < 1.0, "threshold ratio lies in [0, 1)");
  DensityMap out = map;
  const double cut = ratio * map.max();
  if (cut <= 0.0) return out;
  for (double& v : out.values())
    if (v < cut) v = 0.0;
  return out;
}

/// Strict local maxima over the (2w+1)^2 window. Equal values are ranked by
/// row-major position, so a plateau yields its first pixel only.
inline std::vector<Peak> find_peaks(const DensityMap& map, int window) {
  require(window >= 1, "peak window must be >= 1");
  std::vector<Peak> peaks;
  const int h = map.height(), w = map.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = map.at(y, x);
      if (!(v > 0.0)) continue;
      bool is_peak = true;
      for (int yy = std::max(0, y - window); is_peak && yy <= std::min(h - 1, y + window); ++yy) {
        for (int xx = std::max(0, x - window); xx <= std::min(w - 1, x + window); ++xx) {
          const double q = map.at(yy, xx);
          const bool before = yy < y || (yy == y && xx < x);
          if (q > v || (q == v && before)) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back({x, y, v});
    }
  }
  return peaks;
}

/// Square boxes of side box_size centered on each peak pixel, clipped to the image.
inline std::vector<BoundingBox> boxes_from_peaks(const std::vector<Peak>& peaks, double box_size,
                                                 int image_width, int image_height) {
  require(box_size > 0.0, "box size must be positive");
  std::vector<BoundingBox> boxes;
  for (const auto& p : peaks) {
    const double cx = p.x + 0.5, cy = p.y + 0.5, half = box_size / 2;
    const double l = std::max(0.0, cx - half), r = std::min<double>(image_width, cx + half);
    const double t = std::max(0.0, cy - half), b = std::min<double>(image_height, cy + half);
    boxes.push_back({(l + r) / 2, (t + b) / 2, r - l, b - t, p.score});
  }
  return boxes;
}

/// Canonical order: score descending, then top-to-bottom, left-to-right.
inline bool box_precedes(const BoundingBox& a, const BoundingBox& b) {
  return std::make_tuple(-a.score, a.y, a.x, a.w, a.h) < std::make_tuple(-b.score, b.y, b.x, b.w, b.h);
}

/// Greedy non-maximum suppression; a box is dropped when its IoU with an
/// already kept box exceeds iou_threshold. Output is in keep order.
inline std::vector<BoundingBox> nms(std::vector<BoundingBox> boxes, double iou_threshold) {
  require(iou_threshold >= 0.0 && iou_threshold < 1.0, "NMS IoU threshold lies in [0, 1)");
  std::sort(boxes.begin(), boxes.end(), box_precedes);
  std::vector<BoundingBox> kept;
  for (const auto& b : boxes) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](const BoundingBox& k) { return iou(k, b) > iou_threshold; });
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

struct Detections {
  std::size_t count = 0;
  std::vector<BoundingBox> boxes;
};

inline Detections detect(const DensityMap& map, const PostConfig& cfg) {
  validate(cfg);
  const auto peaks = find_peaks(threshold_map(map, cfg.threshold_ratio), cfg.window());
  auto kept = nms(boxes_from_peaks(peaks, cfg.box(), map.width(), map.height()), cfg.nms_iou);
  return {kept.size(), std::move(kept)};
}

}  // namespace deepstand

#endif  // DEEPSTAND_POSTPROCESS_HPP_
