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

#ifndef DEEPSTAND_DATA_HPP_
#define DEEPSTAND_DATA_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepstand/density.hpp"
#include "deepstand/image.hpp"

namespace deepstand {

/// Growth-stage tags, small to large blobs.
inline const std::array<std::string, 3>& stage_tags() {
  static const std::array<std::string, 3> tags{"VE-V1", "V2-V4", "V5-V6"};
  return tags;
}

enum class Background { kFlat, kNoiseTexture };

struct SyntheticSceneConfig {
  int image_height = 128;
  int image_width = 128;
  int min_objects = 5;
  int max_objects = 31;
  double blob_radius_min = 2.5;
  double blob_radius_max = 7.0;
  /// Minimum center-to-center distance between non-occluding objects.
  double min_separation = 7.0;
  Background background = Background::kNoiseTexture;
  /// Probability an object ignores min_separation and may overlap others.
  double occlusion_rate = 0.1;
  int max_placement_retries = 2000;
};

inline void validate(const SyntheticSceneConfig& cfg) {
  require(cfg.image_height >= 1 && cfg.image_width >= 1, "image size must be >= 1");
  require(cfg.min_objects >= 0, "min_objects must be >= 0");
  require(cfg.min_objects <= cfg.max_objects, "min_objects must not exceed max_objects");
  require(cfg.blob_radius_min > 0.0 && cfg.blob_radius_min <= cfg.blob_radius_max,
          "blob radius range must be positive and ordered");
  require(cfg.min_separation >= 0.0, "min_separation must be >= 0");
  require(cfg.occlusion_rate >= 0.0 && cfg.occlusion_rate <= 1.0, "occlusion_rate lies in [0, 1]");
  require(cfg.max_placement_retries >= 1, "max_placement_retries must be >= 1");
}

/// Images with matching annotations, same order.
struct Dataset {
  std::vector<Image> images;
  std::vector<PointAnnotation> annotations;

  std::size_t size() const noexcept { return images.size(); }

  Dataset subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    for (std::size_t i : indices) {
      out.images.push_back(images.at(i));
      out.annotations.push_back(annotations.at(i));
    }
    return out;
  }
};

namespace detail {

/// Bilinearly interpolated lattice noise in [0, 1).
inline std::vector<float> value_noise(int h, int w, int cell, std::mt19937_64& rng) {
  const int gh = h / cell + 2, gw = w / cell + 2;
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> lattice(static_cast<std::size_t>(gh) * gw);
  for (auto& v : lattice) v = u(rng);
  std::vector<float> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const float fy = static_cast<float>(y) / cell;
    const int iy = static_cast<int>(fy);
    const float ty = fy - iy;
    for (int x = 0; x < w; ++x) {
      const float fx = static_cast<float>(x) / cell;
      const int ix = static_cast<int>(fx);
      const float tx = fx - ix;
      const float a = lattice[iy * gw + ix] * (1 - tx) + lattice[iy * gw + ix + 1] * tx;
      const float b = lattice[(iy + 1) * gw + ix] * (1 - tx) + lattice[(iy + 1) * gw + ix + 1] * tx;
      out[static_cast<std::size_t>(y) * w + x] = a * (1 - ty) + b * ty;
    }
  }
  return out;
}

struct Blob {
  Point center;
  double radius;
  double aspect;
  double angle;
  std::array<float, 3> color;
};

/// Radial-gradient ellipse, alpha-composited over the image.
inline void render_blob(Image& img, const Blob& b) {
  const double ext = b.radius * std::max(b.aspect, 1.0 / b.aspect) + 1.0;
  const int y0 = std::max(0, static_cast<int>(std::floor(b.center.y - ext)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(b.center.y + ext)));
  const int x0 = std::max(0, static_cast<int>(std::floor(b.center.x - ext)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(b.center.x + ext)));
  const double ca = std::cos(b.angle), sa = std::sin(b.angle);
  const double ra = b.radius * b.aspect, rb = b.radius / b.aspect;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - b.center.x, dy = y + 0.5 - b.center.y;
      const double u = (dx * ca + dy * sa) / ra, v = (-dx * sa + dy * ca) / rb;
      const double d = std::sqrt(u * u + v * v);
      if (d >= 1.0) continue;
      const float alpha = static_cast<float>(std::min(1.0, 4.0 * (1.0 - d)));
      const float shade = static_cast<float>(1.15 - 0.35 * d);
      for (int c = 0; c < 3; ++c) {
        const float target = std::clamp(b.color[c] * shade, 0.0f, 1.0f);
        img.at(c, y, x) = img.at(c, y, x) * (1 - alpha) + target * alpha;
      }
    }
  }
}

}  // namespace detail

/// One rendered scene. Tag comes from which radius tercile the scene's blobs
/// were drawn from.
inline std::pair<Image, PointAnnotation> synthesize_scene(const SyntheticSceneConfig& cfg,
                                                         const std::string& image_id,
                                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int h = cfg.image_height, w = cfg.image_width;

  Image img(3, h, w);
  const std::array<float, 3> soil{0.46f, 0.34f, 0.24f};
  const float tone = static_cast<float>(0.85 + 0.3 * u01(rng));
  if (cfg.background == Background::kNoiseTexture) {
    const auto coarse = detail::value_noise(h, w, 16, rng);
    const auto fine = detail::value_noise(h, w, 3, rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const float m = tone * (0.75f + 0.35f * coarse[i] + 0.15f * fine[i]);
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = std::clamp(soil[c] * m, 0.0f, 1.0f);
      }
  } else {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(c, y, x) = soil[c] * tone;
  }

  const int stage = static_cast<int>(std::min(2.0, std::floor(u01(rng) * 3.0)));
  const double span = (cfg.blob_radius_max - cfg.blob_radius_min) / 3.0;
  const double r_lo = cfg.blob_radius_min + stage * span;
  const int count = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);

  PointAnnotation ann{image_id, w, h, stage_tags()[stage], {}};
  std::vector<detail::Blob> blobs;
  const double sep2 = cfg.min_separation * cfg.min_separation;
  for (int i = 0; i < count; ++i) {
    const bool may_overlap = u01(rng) < cfg.occlusion_rate;
    Point p;
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_placement_retries && !placed; ++attempt) {
      p = {u01(rng) * w, u01(rng) * h};
      placed = may_overlap || std::none_of(blobs.begin(), blobs.end(), [&](const detail::Blob& b) {
                 const double dx = b.center.x - p.x, dy = b.center.y - p.y;
                 return dx * dx + dy * dy < sep2;
               });
    }
    if (!placed) {
      throw UsageError("cannot place " + std::to_string(count) + " objects with min_separation " +
                       std::to_string(cfg.min_separation) + " in a " + std::to_string(w) + "x" +
                       std::to_string(h) + " image");
    }
    detail::Blob b;
    b.center = p;
    b.radius = r_lo + span * u01(rng);
    b.aspect = 0.75 + 0.5 * u01(rng);
    b.angle = u01(rng) * 3.14159265358979;
    const float g = static_cast<float>(0.55 + 0.3 * u01(rng));
    b.color = {static_cast<float>(0.18 + 0.15 * u01(rng)), g, static_cast<float>(0.1 + 0.12 * u01(rng))};
    blobs.push_back(b);
    ann.points.push_back(p);
  }
  for (const auto& b : blobs) detail::render_blob(img, b);
  quantize8(img);
  return {std::move(img), std::move(ann)};
}

/// n scenes; scene i is seeded from (seed, i) so any prefix is stable.
inline Dataset synthesize_dataset(const SyntheticSceneConfig& cfg, int n_images, std::uint64_t seed) {
  validate(cfg);
  require(n_images >= 1, "n_images must be >= 1");
  Dataset ds;
  for (int i = 0; i < n_images; ++i) {
    std::ostringstream id;
    id << "img_" << std::setw(4) << std::setfill('0') << i;
    auto [img, ann] = synthesize_scene(cfg, id.str(), mix_seed(seed, static_cast<std::uint64_t>(i)));
    ds.images.push_back(std::move(img));
    ds.annotations.push_back(std::move(ann));
  }
  return ds;
}

/// Dataset summary row: images, resolution, min/max/avg/total object count.
struct DatasetStats {
  std::size_t images = 0;
  std::string resolution;
  std::size_t min = 0;
  std::size_t max = 0;
  double avg = 0.0;
  std::size_t total = 0;
};

inline DatasetStats dataset_stats(const Dataset& ds) {
  require(ds.size() >= 1, "dataset is empty");
  DatasetStats s;
  s.images = ds.size();
  s.min = ds.annotations.front().count();
  bool uniform = true;
  for (const auto& a : ds.annotations) {
    s.min = std::min(s.min, a.count());
    s.max = std::max(s.max, a.count());
    s.total += a.count();
    uniform = uniform && a.width == ds.annotations.front().width &&
              a.height == ds.annotations.front().height;
  }
  s.avg = static_cast<double>(s.total) / static_cast<double>(s.images);
  s.resolution = uniform ? std::to_string(ds.annotations.front().width) + "x" +
                               std::to_string(ds.annotations.front().height)
                         : "mixed";
  return s;
}

inline std::string format_stats_table(const DatasetStats& s) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Number of Images" << std::setw(12) << "Resolution"
     << std::setw(6) << "Min" << std::setw(6) << "Max" << std::setw(8) << "Avg" << "Total\n";
  os << std::left << std::setw(18) << s.images << std::setw(12) << s.resolution << std::setw(6)
     << s.min << std::setw(6) << s.max << std::setw(8) << std::fixed << std::setprecision(2)
     << s.avg << s.total << '\n';
  return os.str();
}

/// Seeded 80/20-style split by image. Returns {train, test} index lists.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, std::uint64_t seed) {
  require(test_fraction >= 0.0 && test_fraction <= 1.0, "test_fraction lies in [0, 1]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentConfig {
  std::vector<double> scales = default_scales();
  int patch_size = 304;
  bool flips = true;
  double noise_sigma = 5.0 / 255.0;
  /// Share of patches that receive noise; the rest stay clean.
  double noise_probability = 0.5;
  int patches_per_scale = 30;

  /// 0.4 to 1.3 in steps of 0.1.
  static std::vector<double> default_scales() {
    std::vector<double> s;
    for (int k = 4; k <= 13; ++k) s.push_back(k / 10.0);
    return s;
  }
};

inline void validate(const AugmentConfig& cfg) {
  require(!cfg.scales.empty(), "at least one scale is required");
  for (double s : cfg.scales) require(s > 0.0, "scales must be positive");
  require(cfg.patch_size >= 1, "patch_size must be >= 1");
  require(cfg.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(cfg.noise_probability >= 0.0 && cfg.noise_probability <= 1.0,
          "noise_probability lies in [0, 1]");
  require(cfg.patches_per_scale >= 1, "patches_per_scale must be >= 1");
}

struct Sample {
  Image image;
  PointAnnotation annotation;
};

/// Rescales image and points together, one entry per scale.
inline std::vector<Sample> pyramid_scales(const Image& image, const PointAnnotation& ann,
                                          const std::vector<double>& scales) {
  std::vector<Sample> out;
  for (double s : scales) {
    require(s > 0.0, "scales must be positive");
    Sample smp;
    if (s == 1.0) {
      smp.image = image;
    } else {
      smp.image = resize_bilinear(image, s);
    }
    smp.annotation = ann;
    smp.annotation.width = smp.image.width;
    smp.annotation.height = smp.image.height;
    for (auto& p : smp.annotation.points) {
      p.x *= s;
      p.y *= s;
    }
    out.push_back(std::move(smp));
  }
  return out;
}

/// Mirrors points about the vertical center line of a width-w frame.
inline void flip_points(std::vector<Point>& pts, int w) {
  for (auto& p : pts) {
    p.x = w - p.x;
    // Keep the half-open frame: a point exactly on the left edge maps just inside.
    if (p.x >= w) p.x = std::nextafter(static_cast<double>(w), 0.0);
  }
}

/// Crops patches_per_scale square patches at random positions, each with an
/// optional horizontal flip and, with probability noise_probability, additive
/// Gaussian noise (applied last).
/// Points inside the half-open crop window are kept, shifted to patch coordinates.
inline std::vector<Sample> sample_patches(const Image& image, const PointAnnotation& ann,
                                          const AugmentConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const int p = cfg.patch_size;
  require(p <= image.height && p <= image.width,
          "patch_size " + std::to_string(p) + " exceeds image extent " +
              std::to_string(image.width) + "x" + std::to_string(image.height));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> oy(0, image.height - p), ox(0, image.width - p);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution noisy(cfg.noise_probability);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg.noise_sigma));
  std::vector<Sample> out;
  for (int k = 0; k < cfg.patches_per_scale; ++k) {
    const int top = oy(rng), left = ox(rng);
    const bool flip = cfg.flips && coin(rng);
    const bool add_noise = noisy(rng);
    Sample smp;
    smp.image = crop(image, top, left, p, p);
    smp.annotation.image_id = ann.image_id + "#" + std::to_string(k);
    smp.annotation.width = p;
    smp.annotation.height = p;
    smp.annotation.class_tag = ann.class_tag;
    for (const Point& pt : ann.points) {
      if (pt.x >= left && pt.x < left + p && pt.y >= top && pt.y < top + p)
        smp.annotation.points.push_back({pt.x - left, pt.y - top});
    }
    if (flip) {
      smp.image = flip_horizontal(smp.image);
      flip_points(smp.annotation.points, p);
    }
    if (add_noise && cfg.noise_sigma > 0.0) {
      for (auto& v : smp.image.pixels) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
    }
    out.push_back(std::move(smp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset I/O: dir/annotations.json + dir/images/<id>.png

inline nlohmann::json annotation_to_json(const PointAnnotation& a) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : a.points) pts.push_back({p.x, p.y});
  return {{"id", a.image_id}, {"width", a.width}, {"height", a.height},
          {"class_tag", a.class_tag}, {"points", pts}};
}

inline PointAnnotation annotation_from_json(const nlohmann::json& j) {
  PointAnnotation a;
  try {
    a.image_id = j.at("id").get<std::string>();
    a.width = j.at("width").get<int>();
    a.height = j.at("height").get<int>();
    a.class_tag = j.value("class_tag", std::string{});
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw DataError("point must be [x, y]");
      a.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed annotation entry: ") + e.what());
  }
  validate_annotation(a);
  return a;
}

inline std::vector<PointAnnotation> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotations '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
  }
  if (!doc.contains("images") || !doc["images"].is_array())
    throw DataError("'" + path.string() + "' has no \"images\" array");
  std::vector<PointAnnotation> out;
  for (const auto& j : doc["images"]) out.push_back(annotation_from_json(j));
  return out;
}

inline void write_annotations(const std::filesystem::path& path,
                              const std::vector<PointAnnotation>& anns) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& a : anns) images.push_back(annotation_to_json(a));
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << nlohmann::json{{"images", images}}.dump(1) << '\n';
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir / "images");
  for (std::size_t i = 0; i < ds.size(); ++i)
    write_png(dir / "images" / (ds.annotations[i].image_id + ".png"), ds.images[i]);
  write_annotations(dir / "annotations.json", ds.annotations);
}

/// Resolves an image by id: .png first, then .ppm / .pgm.
inline std::filesystem::path find_image(const std::filesystem::path& dir, const std::string& id) {
  for (const char* ext : {".png", ".ppm", ".pgm"}) {
    auto p = dir / "images" / (id + ext);
    if (std::filesystem::exists(p)) return p;
  }
  throw DataError("image for annotation id '" + id + "' not found under " +
                  (dir / "images").string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.annotations = read_annotations(dir / "annotations.json");
  for (const auto& a : ds.annotations) {
    Image img = read_image(find_image(dir, a.image_id));
    if (img.width != a.width || img.height != a.height) {
      throw DataError("image '" + a.image_id + "' is " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + ", annotation says " + std::to_string(a.width) +
                      "x" + std::to_string(a.height));
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

}  // namespace deepstand

#endif  // DEEPSTAND_DATA_HPP_
