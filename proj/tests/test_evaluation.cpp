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

#include <random>

#include "test_util.hpp"

namespace deepstand {
namespace {

std::vector<EvalRecord> random_records(std::mt19937_64& rng, int n) {
  std::vector<EvalRecord> out;
  for (int i = 0; i < n; ++i) {
    const auto gt = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    out.push_back({"r" + std::to_string(i), gt + std::normal_distribution<double>(0, 3)(rng), gt,
                   stage_tags()[static_cast<std::size_t>(rng() % 3)]});
  }
  return out;
}

TEST(Metrics, WorkedExample) {
  std::vector<EvalRecord> r{{"a", 10, 11, "VE-V1"}, {"b", 12, 14, "VE-V1"}};
  EXPECT_DOUBLE_EQ(mae(r), 1.5);
  EXPECT_DOUBLE_EQ(rmse(r), std::sqrt(2.5));
  EXPECT_THROW(mae({}), UsageError);
}

TEST(Metrics, PerfectPredictionsScoreZero) {
  std::vector<EvalRecord> r{{"a", 3, 3, "VE-V1"}, {"b", 0, 0, "V2-V4"}};
  EXPECT_EQ(mae(r), 0.0);
  EXPECT_EQ(rmse(r), 0.0);
}

TEST(Metrics, RmseDominatesMae) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_records(rng, 1 + t % 30);
    EXPECT_GE(rmse(r) + 1e-12, mae(r));
  }
}

TEST(Summary, ClassRowsAndWeightedMean) {
  std::mt19937_64 rng(2);
  const auto recs = random_records(rng, 60);
  const auto rep = summarize(recs, SplitMode::kByClass);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows.back().split, "overall");
  double weighted = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rep.rows[i].split, stage_tags()[i]);
    weighted += rep.rows[i].mae * static_cast<double>(rep.rows[i].n);
    n += rep.rows[i].n;
  }
  EXPECT_EQ(n, 60u);
  EXPECT_NEAR(weighted / 60.0, rep.row("overall").mae, 1e-10);
  EXPECT_THROW(rep.row("nope"), UsageError);
}

TEST(Summary, IndependentOfRecordOrder) {
  std::mt19937_64 rng(3);
  auto recs = random_records(rng, 40);
  const auto a = summarize(recs, SplitMode::kByClass);
  std::shuffle(recs.begin(), recs.end(), rng);
  const auto b = summarize(recs, SplitMode::kByClass);
  EXPECT_EQ(report_csv(a), report_csv(b));
  EXPECT_EQ(a.row("overall").mae, b.row("overall").mae);
}

TEST(Summary, RoundedCounts) {
  std::vector<EvalRecord> r{{"a", 10.4, 10, "VE-V1"}, {"b", 11.6, 11, "VE-V1"}};
  EXPECT_NEAR(summarize(r, SplitMode::kAll).row("overall").mae, 0.5, 1e-12);
  EXPECT_NEAR(summarize(r, SplitMode::kAll, true).row("overall").mae, 0.5, 1e-12);
  std::vector<EvalRecord> s{{"a", 10.4, 10, "VE-V1"}};
  EXPECT_EQ(summarize(s, SplitMode::kAll, true).row("overall").mae, 0.0);
}

TEST(Summary, MissingClassTagIsADataError) {
  std::vector<EvalRecord> r{{"a", 1, 1, ""}};
  EXPECT_THROW(summarize(r, SplitMode::kByClass), DataError);
  EXPECT_NO_THROW(summarize(r, SplitMode::kAll));
}

TEST(Evaluate, OraclePredictorIsExact) {
  SyntheticSceneConfig cfg;
  cfg.image_height = cfg.image_width = 64;
  cfg.min_objects = 3;
  cfg.max_objects = 8;
  const auto ds = synthesize_dataset(cfg, 6, 1);
  const auto rep = evaluate(oracle_predictor(FixedSigma{3.0}), ds, SplitMode::kByClass);
  EXPECT_LT(rep.row("overall").mae, 1e-9);
  const auto csv = report_csv(rep);
  EXPECT_EQ(csv.substr(0, 16), "split,N,MAE,RMSE");
  EXPECT_NE(csv.find("overall,6,0.0000,0.0000"), std::string::npos);
}

TEST(Evaluate, ZeroPredictorMaeIsMeanCount) {
  SyntheticSceneConfig cfg;
  cfg.image_height = cfg.image_width = 64;
  cfg.min_objects = 3;
  cfg.max_objects = 8;
  const auto ds = synthesize_dataset(cfg, 6, 2);
  const auto rep = evaluate([](const Image&, const PointAnnotation&) { return 0.0; }, ds, SplitMode::kAll);
  double mean = 0.0;
  for (const auto& a : ds.annotations) mean += static_cast<double>(a.count()) / 6.0;
  EXPECT_NEAR(rep.row("overall").mae, mean, 1e-12);
}

TEST(Evaluate, NetworkPredictorNeedsMultipleOfEight) {
  NetConfig net;
  net.input_height = net.input_width = 32;
  net.width_multiplier = 0.125;
  TrainConfig tc;
  tc.augment.patch_size = 32;
  const auto ck = initial_checkpoint(net, tc);
  Dataset ds;
  ds.images.emplace_back(3, 36, 32);
  ds.annotations.push_back({"odd", 32, 36, "VE-V1", {}});
  EXPECT_THROW(evaluate(ck, ds, SplitMode::kAll), UsageError);
  ds.images[0] = Image(3, 40, 32);
  ds.annotations[0].height = 40;
  EXPECT_NO_THROW(evaluate(ck, ds, SplitMode::kAll));
}

}  // namespace
}  // namespace deepstand
