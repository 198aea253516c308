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

#ifndef DEEPSTAND_CONFIG_HPP_
#define DEEPSTAND_CONFIG_HPP_

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "deepstand/data.hpp"
#include "deepstand/network.hpp"
#include "deepstand/postprocess.hpp"

// JSON forms of the configuration structs. Missing keys keep their defaults;
// unknown keys are rejected so typos do not pass silently.

namespace deepstand {

using nlohmann::json;

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw UsageError(std::string(what) + " config must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw UsageError(std::string("unknown key '") + item.key() + "' in " + what + " config");
  }
}

template <typename V>
void read_key(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline json to_json(const NetConfig& c) {
  return {{"input_size", {c.input_height, c.input_width}},
          {"width_multiplier", c.width_multiplier},
          {"tap_blocks", c.tap_blocks},
          {"deconv_kernels", c.deconv_kernels},
          {"head_channels", c.head_channels},
          {"deconv_channels", c.deconv_channels}};
}

inline NetConfig net_config_from_json(const json& j, NetConfig c = {}) {
  detail::check_keys(j, {"input_size", "width_multiplier", "tap_blocks", "deconv_kernels",
                         "head_channels", "deconv_channels"},
                     "network");
  if (j.contains("input_size")) {
    std::array<int, 2> hw{};
    detail::read_key(j, "input_size", hw);
    c.input_height = hw[0];
    c.input_width = hw[1];
  }
  detail::read_key(j, "width_multiplier", c.width_multiplier);
  detail::read_key(j, "tap_blocks", c.tap_blocks);
  detail::read_key(j, "deconv_kernels", c.deconv_kernels);
  detail::read_key(j, "head_channels", c.head_channels);
  detail::read_key(j, "deconv_channels", c.deconv_channels);
  validate(c);
  return c;
}

inline json to_json(const SigmaMode& m) {
  if (const auto* f = std::get_if<FixedSigma>(&m)) return {{"mode", "fixed"}, {"sigma", f->sigma}};
  const auto& k = std::get<KnnSigma>(m);
  return {{"mode", "knn"}, {"k", k.k}, {"scale", k.scale}, {"fallback_sigma", k.fallback_sigma}};
}

inline SigmaMode sigma_mode_from_json(const json& j) {
  detail::check_keys(j, {"mode", "sigma", "k", "scale", "fallback_sigma"}, "density");
  std::string mode = "knn";
  detail::read_key(j, "mode", mode);
  if (mode == "fixed") {
    FixedSigma f;
    detail::read_key(j, "sigma", f.sigma);
    require(f.sigma > 0.0, "sigma must be positive");
    return f;
  }
  if (mode != "knn") throw UsageError("density mode must be 'fixed' or 'knn', got '" + mode + "'");
  KnnSigma k;
  detail::read_key(j, "k", k.k);
  detail::read_key(j, "scale", k.scale);
  detail::read_key(j, "fallback_sigma", k.fallback_sigma);
  require(k.k >= 1 && k.scale > 0.0 && k.fallback_sigma > 0.0, "invalid knn density settings");
  return k;
}

inline json to_json(const AugmentConfig& c) {
  return {{"scales", c.scales},
          {"patch_size", c.patch_size},
          {"flips", c.flips},
          {"noise_sigma", c.noise_sigma},
          {"noise_probability", c.noise_probability},
          {"patches_per_scale", c.patches_per_scale}};
}

inline AugmentConfig augment_config_from_json(const json& j, AugmentConfig c = {}) {
  detail::check_keys(j, {"scales", "patch_size", "flips", "noise_sigma", "noise_probability",
                         "patches_per_scale"},
                     "augment");
  detail::read_key(j, "scales", c.scales);
  detail::read_key(j, "patch_size", c.patch_size);
  detail::read_key(j, "flips", c.flips);
  detail::read_key(j, "noise_sigma", c.noise_sigma);
  detail::read_key(j, "noise_probability", c.noise_probability);
  detail::read_key(j, "patches_per_scale", c.patches_per_scale);
  validate(c);
  return c;
}

inline json to_json(const SyntheticSceneConfig& c) {
  return {{"image_size", {c.image_height, c.image_width}},
          {"objects_per_image", {c.min_objects, c.max_objects}},
          {"blob_radius_range", {c.blob_radius_min, c.blob_radius_max}},
          {"min_separation", c.min_separation},
          {"background", c.background == Background::kFlat ? "flat" : "noise-texture"},
          {"occlusion_rate", c.occlusion_rate},
          {"max_placement_retries", c.max_placement_retries}};
}

inline SyntheticSceneConfig scene_config_from_json(const json& j, SyntheticSceneConfig c = {}) {
  detail::check_keys(j, {"image_size", "objects_per_image", "blob_radius_range", "min_separation",
                         "background", "occlusion_rate", "max_placement_retries"},
                     "synthetic scene");
  if (j.contains("image_size")) {
    std::array<int, 2> hw{};
    detail::read_key(j, "image_size", hw);
    c.image_height = hw[0];
    c.image_width = hw[1];
  }
  if (j.contains("objects_per_image")) {
    std::array<int, 2> r{};
    detail::read_key(j, "objects_per_image", r);
    c.min_objects = r[0];
    c.max_objects = r[1];
  }
  if (j.contains("blob_radius_range")) {
    std::array<double, 2> r{};
    detail::read_key(j, "blob_radius_range", r);
    c.blob_radius_min = r[0];
    c.blob_radius_max = r[1];
  }
  detail::read_key(j, "min_separation", c.min_separation);
  if (j.contains("background")) {
    std::string bg;
    detail::read_key(j, "background", bg);
    if (bg == "flat") c.background = Background::kFlat;
    else if (bg == "noise-texture") c.background = Background::kNoiseTexture;
    else throw UsageError("background must be 'flat' or 'noise-texture'");
  }
  detail::read_key(j, "occlusion_rate", c.occlusion_rate);
  detail::read_key(j, "max_placement_retries", c.max_placement_retries);
  validate(c);
  return c;
}

inline json to_json(const PostConfig& c) {
  return {{"threshold_ratio", c.threshold_ratio}, {"sigma_box", c.sigma_box},
          {"peak_window", c.peak_window},         {"box_size", c.box_size},
          {"nms_iou", c.nms_iou}};
}

inline PostConfig post_config_from_json(const json& j, PostConfig c = {}) {
  detail::check_keys(j, {"threshold_ratio", "sigma_box", "peak_window", "box_size", "nms_iou"},
                     "postprocess");
  detail::read_key(j, "threshold_ratio", c.threshold_ratio);
  detail::read_key(j, "sigma_box", c.sigma_box);
  detail::read_key(j, "peak_window", c.peak_window);
  detail::read_key(j, "box_size", c.box_size);
  detail::read_key(j, "nms_iou", c.nms_iou);
  validate(c);
  return c;
}

}  // namespace deepstand

#endif  // DEEPSTAND_CONFIG_HPP_
