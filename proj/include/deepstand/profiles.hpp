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

#ifndef DEEPSTAND_PROFILES_HPP_
#define DEEPSTAND_PROFILES_HPP_

#include <filesystem>
#include <fstream>
#include <string>

#include "deepstand/training.hpp"

namespace deepstand {

/// Everything a pipeline run needs, bundled.
struct Profile {
  std::string name;
  NetConfig net;
  TrainConfig train;
  SyntheticSceneConfig scene;
  PostConfig post;
};

/// Laptop-sized run: 1/8-width network on 64x64 patches, 2000 iterations.
inline Profile desk_profile() {
  Profile p;
  p.name = "desk";
  p.net.input_height = 64;
  p.net.input_width = 64;
  p.net.width_multiplier = 0.125;
  p.train.iterations = 2000;
  p.train.checkpoint_every = 100;
  p.train.augment.patch_size = 64;
  p.train.augment.patches_per_scale = 4;
  p.train.density = FixedSigma{3.0};
  p.scene.image_height = 128;
  p.scene.image_width = 128;
  p.post.sigma_box = 3.0;
  return p;
}

/// Full-size settings: 304x304 input, full width, 80k iterations.
inline Profile full_profile() {
  Profile p;
  p.name = "full";
  p.train.augment.patch_size = 304;
  p.train.augment.patches_per_scale = 30;
  p.scene.image_height = 768;
  p.scene.image_width = 1024;
  p.scene.blob_radius_min = 8.0;
  p.scene.blob_radius_max = 40.0;
  p.scene.min_separation = 40.0;
  p.post.sigma_box = 12.0;
  return p;
}

inline Profile profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "full") return full_profile();
  throw UsageError("unknown profile '" + name + "' (expected desk or full)");
}

/// Overlays a JSON document {"network":..,"training":..,"scene":..,"postprocess":..}.
inline Profile apply_config(Profile p, const json& j) {
  detail::check_keys(j, {"profile", "network", "training", "scene", "postprocess"}, "top-level");
  if (j.contains("profile")) p = profile_by_name(j["profile"].get<std::string>());
  if (j.contains("network")) p.net = net_config_from_json(j["network"], p.net);
  if (j.contains("training")) p.train = train_config_from_json(j["training"], p.train);
  if (j.contains("scene")) p.scene = scene_config_from_json(j["scene"], p.scene);
  if (j.contains("postprocess")) p.post = post_config_from_json(j["postprocess"], p.post);
  return p;
}

inline Profile load_config_file(const std::filesystem::path& path, Profile base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  try {
    return apply_config(std::move(base), json::parse(in));
  } catch (const json::exception& e) {
    throw UsageError("malformed config '" + path.string() + "': " + e.what());
  }
}

inline json to_json(const Profile& p) {
  return {{"profile", p.name},
          {"network", to_json(p.net)},
          {"training", to_json(p.train)},
          {"scene", to_json(p.scene)},
          {"postprocess", to_json(p.post)}};
}

}  // namespace deepstand

#endif  // DEEPSTAND_PROFILES_HPP_
