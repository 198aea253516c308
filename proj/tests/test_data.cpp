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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "test_util.hpp"

namespace deepstand {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("deepstand_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Synthetic, ScenesAreSeededAndValid) {
  SyntheticSceneConfig cfg;
  const auto a = synthesize_dataset(cfg, 20, 42), b = synthesize_dataset(cfg, 20, 42);
  const auto c = synthesize_dataset(cfg, 5, 43);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.images[i], b.images[i]);
    EXPECT_EQ(a.annotations[i], b.annotations[i]);
    const auto& ann = a.annotations[i];
    EXPECT_GE(ann.count(), 5u);
    EXPECT_LE(ann.count(), 31u);
    EXPECT_NO_THROW(validate_annotation(ann));
    EXPECT_NE(std::find(stage_tags().begin(), stage_tags().end(), ann.class_tag), stage_tags().end());
    for (float v : a.images[i].pixels) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  EXPECT_FALSE(a.images[0] == c.images[0]);
  const auto prefix = synthesize_dataset(cfg, 3, 42);
  EXPECT_EQ(prefix.annotations[2], a.annotations[2]);
  EXPECT_EQ(a.annotations[3].image_id, "img_0003");
}

TEST(Synthetic, UnsatisfiablePlacementIsAUsageError) {
  SyntheticSceneConfig cfg;
  cfg.image_height = cfg.image_width = 16;
  cfg.min_objects = cfg.max_objects = 30;
  cfg.min_separation = 10.0;
  cfg.occlusion_rate = 0.0;
  cfg.max_placement_retries = 50;
  EXPECT_THROW(synthesize_dataset(cfg, 1, 0), UsageError);
  cfg.min_objects = 40;
  EXPECT_THROW(validate(cfg), UsageError);
}

TEST(Synthetic, StatsTableSummarizesCounts) {
  Dataset ds;
  for (int n : {5, 9, 31}) {
    ds.images.emplace_back(3, 8, 8);
    PointAnnotation a{"x", 8, 8, "VE-V1", std::vector<Point>(static_cast<std::size_t>(n), Point{1, 1})};
    ds.annotations.push_back(a);
  }
  const auto s = dataset_stats(ds);
  EXPECT_EQ(s.min, 5u);
  EXPECT_EQ(s.max, 31u);
  EXPECT_EQ(s.total, 45u);
  EXPECT_DOUBLE_EQ(s.avg, 15.0);
  EXPECT_EQ(s.resolution, "8x8");
  const auto table = format_stats_table(s);
  EXPECT_NE(table.find("Number of Images"), std::string::npos);
  EXPECT_NE(table.find("45"), std::string::npos);
}

TEST(Split, SizesAndDisjointness) {
  auto [train, test] = split_indices(394, 0.2, 1);
  EXPECT_EQ(test.size(), 79u);
  EXPECT_EQ(train.size(), 315u);
  std::vector<std::size_t> all = train;
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(split_indices(394, 0.2, 1).second, test);
  EXPECT_NE(split_indices(394, 0.2, 2).second, test);
  EXPECT_EQ(split_indices(250, 0.2, 7).second.size(), 50u);
}

TEST(Augment, PyramidScalesImageAndPoints) {
  Image img(3, 40, 60, 0.5f);
  PointAnnotation ann{"a", 60, 40, "VE-V1", {{10, 20}, {59.5, 39.5}}};
  const auto levels = pyramid_scales(img, ann, {0.5, 1.0, 1.3});
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_EQ(levels[0].image.width, 30);
  EXPECT_EQ(levels[0].image.height, 20);
  EXPECT_EQ(levels[0].annotation.points[0], (Point{5, 10}));
  EXPECT_EQ(levels[1].image, img);
  EXPECT_EQ(levels[2].image.width, 78);
  EXPECT_EQ(levels[2].image.height, 52);
  for (const auto& l : levels) EXPECT_NO_THROW(validate_annotation(l.annotation));
  EXPECT_EQ(AugmentConfig::default_scales().size(), 10u);
}

TEST(Augment, PatchesAreCropsWithShiftedPoints) {
  std::mt19937_64 rng(3);
  Image img(3, 50, 70);
  for (auto& v : img.pixels) v = std::uniform_real_distribution<float>(0, 1)(rng);
  PointAnnotation ann{"a", 70, 50, "V2-V4", {}};
  for (int i = 0; i < 40; ++i)
    ann.points.push_back({std::uniform_real_distribution<double>(0, 70)(rng),
                          std::uniform_real_distribution<double>(0, 50)(rng)});
  AugmentConfig cfg;
  cfg.patch_size = 24;
  cfg.flips = false;
  cfg.noise_sigma = 0.0;
  cfg.patches_per_scale = 12;
  const auto patches = sample_patches(img, ann, cfg, 99);
  ASSERT_EQ(patches.size(), 12u);
  for (const auto& p : patches) {
    int found_top = -1, found_left = -1;
    for (int t = 0; t <= 50 - 24 && found_top < 0; ++t)
      for (int l = 0; l <= 70 - 24; ++l)
        if (crop(img, t, l, 24, 24) == p.image) {
          found_top = t;
          found_left = l;
          break;
        }
    ASSERT_GE(found_top, 0);
    std::vector<Point> expect;
    for (const auto& q : ann.points)
      if (q.x >= found_left && q.x < found_left + 24 && q.y >= found_top && q.y < found_top + 24)
        expect.push_back({q.x - found_left, q.y - found_top});
    EXPECT_EQ(p.annotation.points, expect);
  }
  EXPECT_EQ(sample_patches(img, ann, cfg, 99)[5].image, patches[5].image);
  cfg.patch_size = 60;
  EXPECT_THROW(sample_patches(img, ann, cfg, 1), UsageError);
}

TEST(Augment, FullFramePatchKeepsCoordinates) {
  Image img(3, 310, 310);
  PointAnnotation ann{"a", 310, 310, "VE-V1", {{10, 10}}};
  AugmentConfig cfg;
  cfg.patch_size = 310;
  cfg.flips = false;
  cfg.noise_sigma = 0.0;
  cfg.patches_per_scale = 1;
  EXPECT_EQ(sample_patches(img, ann, cfg, 0)[0].annotation.points[0], (Point{10, 10}));
}

TEST(Augment, FlippedDensityIsMirroredDensity) {
  std::mt19937_64 rng(6);
  std::vector<Point> pts;
  for (int i = 0; i < 15; ++i)
    pts.push_back({std::uniform_real_distribution<double>(0, 40)(rng), std::uniform_real_distribution<double>(0, 30)(rng)});
  pts.push_back({0.0, 3.0});
  const auto d = generate_density_map(pts, 30, 40, FixedSigma{2.0});
  auto flipped = pts;
  flip_points(flipped, 40);
  for (const auto& p : flipped) EXPECT_TRUE(point_in_bounds(p, 40, 30));
  const auto f = generate_density_map(flipped, 30, 40, FixedSigma{2.0});
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) EXPECT_NEAR(f.at(y, x), d.at(y, 39 - x), 1e-12);
  EXPECT_NEAR(count_from_density(f), 16.0, 1e-9);
}

TEST(Augment, NoiseKeepsRangeAndFlipMirrorsPixels) {
  Image img(3, 16, 16, 1.0f);
  img.at(0, 3, 0) = 0.0f;
  const auto f = flip_horizontal(img);
  EXPECT_EQ(f.at(0, 3, 15), 0.0f);
  AugmentConfig cfg;
  cfg.patch_size = 16;
  cfg.noise_sigma = 0.2;
  cfg.noise_probability = 1.0;
  cfg.patches_per_scale = 3;
  for (const auto& p : sample_patches(img, PointAnnotation{"a", 16, 16, "", {}}, cfg, 5))
    for (float v : p.image.pixels) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
}

TEST(Augment, NoiseProbabilitySelectsNoisyPatches) {
  Image img(3, 16, 16, 0.5f);
  AugmentConfig cfg;
  cfg.patch_size = 16;
  cfg.flips = false;
  cfg.noise_sigma = 0.1;
  cfg.patches_per_scale = 200;
  const PointAnnotation ann{"a", 16, 16, "", {}};
  auto noisy_count = [&](double prob) {
    cfg.noise_probability = prob;
    int n = 0;
    for (const auto& p : sample_patches(img, ann, cfg, 8)) n += !(p.image == img);
    return n;
  };
  EXPECT_EQ(noisy_count(0.0), 0);
  EXPECT_EQ(noisy_count(1.0), 200);
  const int half = noisy_count(0.5);
  EXPECT_GT(half, 70);
  EXPECT_LT(half, 130);
  cfg.noise_probability = 1.5;
  EXPECT_THROW(validate(cfg), UsageError);
}

TEST(DatasetIo, SaveLoadRoundTrip) {
  const auto dir = temp_dir("roundtrip");
  SyntheticSceneConfig cfg;
  cfg.image_height = 40;
  cfg.image_width = 48;
  cfg.min_objects = 2;
  cfg.max_objects = 6;
  const auto ds = synthesize_dataset(cfg, 4, 1);
  save_dataset(dir, ds);
  const auto back = load_dataset(dir);
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back.annotations[i], ds.annotations[i]);
    EXPECT_EQ(back.images[i], ds.images[i]);
  }
  fs::remove(dir / "images" / "img_0002.png");
  try {
    load_dataset(dir);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("img_0002"), std::string::npos);
  }
  write_pnm(dir / "images" / "img_0002.ppm", ds.images[2]);
  EXPECT_EQ(load_dataset(dir).images[2], ds.images[2]);
  fs::remove_all(dir);
}

TEST(DatasetIo, MalformedAnnotationsAreDataErrors) {
  const auto dir = temp_dir("malformed");
  std::ofstream(dir / "annotations.json") << "{ not json";
  EXPECT_THROW(read_annotations(dir / "annotations.json"), DataError);
  std::ofstream(dir / "annotations.json") << R"({"images":[{"id":"q","width":10,"height":10,"points":[[11,2]]}]})";
  EXPECT_THROW(read_annotations(dir / "annotations.json"), DataError);
  std::ofstream(dir / "annotations.json") << R"({"images":[{"id":"q","width":10,"points":[]}]})";
  EXPECT_THROW(read_annotations(dir / "annotations.json"), DataError);
  EXPECT_THROW(read_annotations(dir / "missing.json"), DataError);
  fs::remove_all(dir);
}

TEST(ImageIo, PngAndPnmRoundTrip) {
  const auto dir = temp_dir("png");
  std::mt19937_64 rng(2);
  Image img(3, 9, 13);
  for (auto& v : img.pixels) v = std::uniform_real_distribution<float>(0, 1)(rng);
  quantize8(img);
  write_image(dir / "a.png", img);
  EXPECT_EQ(read_image(dir / "a.png"), img);
  write_image(dir / "a.ppm", img);
  EXPECT_EQ(read_image(dir / "a.ppm"), img);
  Image gray(1, 5, 4, 0.2f);
  quantize8(gray);
  write_image(dir / "g.pgm", gray);
  const Image back = read_image(dir / "g.pgm");
  ASSERT_EQ(back.channels, 3);
  ASSERT_EQ(back.height, 5);
  ASSERT_EQ(back.width, 4);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 4; ++x) EXPECT_EQ(back.at(c, y, x), gray.at(0, y, x));
  std::ofstream(dir / "bad.png") << "nope";
  EXPECT_THROW(read_image(dir / "bad.png"), DataError);
  fs::remove_all(dir);
}

TEST(ImageIo, BilinearResizeOfConstantIsConstant) {
  Image img(3, 20, 30, 0.25f);
  const auto r = resize_bilinear(img, 0.7);
  EXPECT_EQ(r.width, 21);
  EXPECT_EQ(r.height, 14);
  for (float v : r.pixels) EXPECT_NEAR(v, 0.25f, 1e-6);
}

}  // namespace
}  // namespace deepstand
