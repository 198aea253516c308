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
#include <limits>
#include <sstream>

#include "test_util.hpp"

namespace deepstand {
namespace {

namespace fs = std::filesystem;

NetConfig tiny_net() {
  NetConfig n;
  n.input_height = n.input_width = 32;
  n.width_multiplier = 0.125;
  return n;
}

TrainConfig tiny_train(int iterations = 6) {
  TrainConfig t;
  t.iterations = iterations;
  t.batch_size = 2;
  t.seed = 11;
  t.checkpoint_every = 3;
  t.augment.patch_size = 32;
  t.augment.scales = {0.75, 1.0};
  t.augment.patches_per_scale = 2;
  t.density = FixedSigma{2.0};
  return t;
}

Dataset tiny_data() {
  SyntheticSceneConfig s;
  s.image_height = s.image_width = 48;
  s.min_objects = 2;
  s.max_objects = 6;
  return synthesize_dataset(s, 3, 5);
}

std::string serialize(const Checkpoint& ck) {
  std::ostringstream os;
  write_checkpoint(os, ck);
  return os.str();
}

TEST(LearningRate, LinearAndExponentialEndpoints) {
  TrainConfig c;
  c.iterations = 2000;
  EXPECT_DOUBLE_EQ(lr_at(0, c), 3e-4);
  EXPECT_DOUBLE_EQ(lr_at(1999, c), 25e-6);
  EXPECT_NEAR(lr_at(1000, c), 3e-4 + (25e-6 - 3e-4) * 1000.0 / 1999.0, 1e-18);
  c.decay = DecaySchedule::kExponential;
  EXPECT_DOUBLE_EQ(lr_at(0, c), 3e-4);
  EXPECT_DOUBLE_EQ(lr_at(1999, c), 25e-6);
  double prev = lr_at(0, c);
  for (int i = 1; i < 2000; ++i) {
    const double lr = lr_at(i, c);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
  EXPECT_THROW(lr_at(2000, c), UsageError);
  c.lr_final = 1e-3;
  EXPECT_THROW(validate(c), UsageError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<double> p({1}, 1.0), g({1}, 0.5);
  AdamMoments<double> m;
  adam_step(p, g, m, 3e-4, 0.9, 0.999, 1e-8, 1);
  EXPECT_NEAR(p[0], 0.9997, 1e-10);
}

TEST(LearningRate, LinearMidpoint) {
  TrainConfig c;
  c.iterations = 2001;
  EXPECT_NEAR(lr_at(1000, c), 1.625e-4, 1e-15);
}

TEST(Adam, ZeroGradientIsANoOp) {
  Tensor<double> p({3}, 0.7), g({3});
  AdamMoments<double> m;
  for (int t = 1; t <= 3; ++t) adam_step(p, g, m, 1e-2, 0.9, 0.999, 1e-8, t);
  EXPECT_EQ(p, Tensor<double>({3}, 0.7));
  EXPECT_EQ(m.m, Tensor<double>({3}));
  EXPECT_EQ(m.v, Tensor<double>({3}));
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  Tensor<double> p({1}, 0.0), g({1}, -0.3);
  AdamMoments<double> m;
  double prev = 0.0, step = 0.0;
  for (int t = 1; t <= 500; ++t) {
    adam_step(p, g, m, 1e-3, 0.9, 0.999, 1e-8, t);
    step = p[0] - prev;
    prev = p[0];
  }
  EXPECT_NEAR(step, 1e-3, 1e-9);
}

TEST(Adam, ShapeMismatchIsRejected) {
  Tensor<double> p({2}), g({3});
  AdamMoments<double> m;
  EXPECT_THROW(adam_step(p, g, m, 1e-3, 0.9, 0.999, 1e-8, 1), UsageError);
  EXPECT_THROW(adam_step(p, p, m, 1e-3, 0.9, 0.999, 1e-8, 0), UsageError);
}

TEST(Adam, MatchesScalarRecurrence) {
  std::mt19937_64 rng(1);
  Tensor<double> p({5}, 0.3);
  AdamMoments<double> mom;
  std::vector<double> rp(5, 0.3), rm(5, 0.0), rv(5, 0.0);
  for (int t = 1; t <= 25; ++t) {
    auto g = testing::random_tensor<double>({5}, rng);
    adam_step(p, g, mom, 1e-2, 0.9, 0.999, 1e-8, t);
    for (int i = 0; i < 5; ++i) {
      rm[i] = 0.9 * rm[i] + 0.1 * g[i];
      rv[i] = 0.999 * rv[i] + 0.001 * g[i] * g[i];
      const double mh = rm[i] / (1 - std::pow(0.9, t)), vh = rv[i] / (1 - std::pow(0.999, t));
      rp[i] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(p[i], rp[i], 1e-12);
}

TEST(Adam, NonFiniteGradientLeavesParametersUntouched) {
  auto params = build_network<float>(tiny_net(), 1);
  const auto before = params.layers[3].kernel->value;
  params.layers[0].kernel->grad_buffer()[0] = std::numeric_limits<float>::quiet_NaN();
  params.layers[3].kernel->grad_buffer().fill(1.0f);
  AdamState<float> st;
  EXPECT_THROW(adam_update(params, st, 1e-3, TrainConfig{}), NumericError);
  EXPECT_TRUE(params.layers[3].kernel->value == before);
  EXPECT_EQ(st.step, 0);
}

TEST(Checkpoint, RoundTripIsExact) {
  auto res = train(tiny_data(), tiny_net(), tiny_train(3));
  const auto bytes = serialize(res.checkpoint);
  std::istringstream is(bytes);
  const auto back = read_checkpoint(is);
  EXPECT_EQ(back.net, res.checkpoint.net);
  EXPECT_TRUE(back.train == res.checkpoint.train);
  EXPECT_EQ(back.iteration, 3);
  EXPECT_EQ(back.adam.step, 3);
  EXPECT_EQ(back.rng_state, res.checkpoint.rng_state);
  EXPECT_TRUE(serialize(back) == bytes);
  EXPECT_EQ(bytes.substr(0, 8), std::string("DSTCKPT\0", 8));
}

TEST(Checkpoint, CorruptionIsADataError) {
  auto ck = initial_checkpoint(tiny_net(), tiny_train());
  const auto bytes = serialize(ck);
  auto expect_data_error = [](const std::string& b) {
    std::istringstream is(b);
    EXPECT_THROW(read_checkpoint(is), DataError);
  };
  expect_data_error(bytes.substr(0, bytes.size() / 2));
  expect_data_error(bytes.substr(0, 5));
  std::string magic = bytes;
  magic[0] = 'X';
  expect_data_error(magic);
  std::string version = bytes;
  version[8] = 9;
  expect_data_error(version);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), DataError);
}

TEST(Training, ResumeIsTransparent) {
  const auto dir = fs::temp_directory_path() / "deepstand_test_resume";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto data = tiny_data();
  const auto full = train(data, tiny_net(), tiny_train(6));

  TrainOptions first;
  first.max_iterations = 3;
  first.checkpoint_path = dir / "a.ckpt";
  const auto part1 = train(data, tiny_net(), tiny_train(6), first);
  EXPECT_EQ(part1.history.size(), 3u);
  const auto part2 = train(data, tiny_net(), tiny_train(6), {}, load_checkpoint(dir / "a.ckpt"));

  auto history = part1.history;
  history.insert(history.end(), part2.history.begin(), part2.history.end());
  EXPECT_EQ(history, full.history);
  EXPECT_TRUE(serialize(part2.checkpoint) == serialize(full.checkpoint));
  fs::remove_all(dir);
}

TEST(Training, ZeroLearningRateFreezesWeights) {
  auto cfg = tiny_train(3);
  cfg.lr_initial = cfg.lr_final = 0.0;
  const auto res = train(tiny_data(), tiny_net(), cfg);
  const auto init = initial_checkpoint(tiny_net(), cfg);
  for (std::size_t i = 0; i < init.params.layers.size(); ++i)
    EXPECT_TRUE(res.checkpoint.params.layers[i].kernel->value == init.params.layers[i].kernel->value);
}

TEST(Training, LossDecreasesWhenOverfittingOneBatch) {
  const auto data = tiny_data();
  const auto cfg = tiny_train();
  const auto pool = build_patch_pool(data, cfg.augment, 1);
  ASSERT_GE(pool.size(), 2u);
  std::vector<const Sample*> batch;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!pool[i].annotation.points.empty() && batch.size() < 2) batch.push_back(&pool[i]);
  ASSERT_EQ(batch.size(), 2u);
  const auto [x, y] = make_batch(batch, cfg.density);
  auto params = build_network<float>(tiny_net(), 2);
  for (auto& l : params.layers) l.bias->value.fill(0.01f);
  AdamState<float> st;
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 60; ++i) {
    params.zero_grad();
    last = loss_and_gradients(params, tiny_net(), x, y);
    if (i == 0) first = last;
    adam_update(params, st, 1e-3, cfg);
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(Training, LossStrictlyDecreasesOverFiftySteps) {
  const auto cfg = tiny_train();
  const auto pool = build_patch_pool(tiny_data(), cfg.augment, 4);
  std::vector<const Sample*> batch{&pool[0], &pool[1]};
  const auto [x, y] = make_batch(batch, cfg.density);
  auto params = build_network<float>(tiny_net(), 6);
  for (auto& l : params.layers) l.bias->value.fill(0.01f);
  AdamState<float> st;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    params.zero_grad();
    const double loss = loss_and_gradients(params, tiny_net(), x, y);
    EXPECT_LT(loss, prev) << "step " << i;
    prev = loss;
    adam_update(params, st, 3e-4, cfg);
  }
}

TEST(Training, OneStepEqualsBackwardThenAdam) {
  const auto data = tiny_data();
  const auto cfg = tiny_train(1);
  const auto res = train(data, tiny_net(), cfg);

  auto ck = initial_checkpoint(tiny_net(), cfg);
  const auto pool = build_patch_pool(data, cfg.augment, cfg.seed);
  std::mt19937_64 rng;
  std::istringstream(ck.rng_state) >> rng;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<const Sample*> batch;
  for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(&pool[pick(rng)]);
  const auto [x, y] = make_batch(batch, cfg.density);
  Graph<float> g;
  g.backward(sse_loss(g, forward(g, ck.params, ck.net, make_var(x)), make_var(y)));
  const auto tensors = ck.params.tensors();
  const auto trained = res.checkpoint.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    AdamMoments<float> m;
    Tensor<float> p = tensors[i]->value;
    adam_step(p, tensors[i]->grad, m, lr_at(0, cfg), cfg.beta1, cfg.beta2, cfg.epsilon, 1);
    EXPECT_TRUE(p == trained[i]->value) << "tensor " << i;
  }
}

TEST(Training, ResumeWithNoFurtherIterationsKeepsPredictions) {
  const auto data = tiny_data();
  const auto res = train(data, tiny_net(), tiny_train(2));
  std::istringstream is(serialize(res.checkpoint));
  auto ck = read_checkpoint(is);
  TrainOptions none;
  none.max_iterations = 0;
  const auto again = train(data, tiny_net(), tiny_train(2), none, ck);
  EXPECT_TRUE(again.history.empty());
  const auto img = to_network_input<float>(data.images[0]);
  EXPECT_TRUE(predict_density(again.checkpoint.params, again.checkpoint.net, img) ==
              predict_density(res.checkpoint.params, res.checkpoint.net, img));
}

TEST(Training, DeskProfileOverfitsOneImage) {
  auto p = desk_profile();
  p.train.iterations = 200;
  p.train.seed = 3;
  p.scene.min_objects = 12;
  p.scene.max_objects = 12;
  const auto one = synthesize_dataset(p.scene, 1, 8);
  const auto res = train(one, p.net, p.train);
  ASSERT_EQ(res.history.size(), 200u);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += res.history[i].loss;
    tail += res.history[190 + i].loss;
  }
  EXPECT_LT(tail, head);
}

TEST(Training, BatchTargetsIntegrateToPatchCounts) {
  const auto cfg = tiny_train();
  const auto pool = build_patch_pool(tiny_data(), cfg.augment, 3);
  std::vector<const Sample*> batch{&pool[0], &pool[1], &pool[2]};
  const auto [x, y] = make_batch(batch, cfg.density);
  EXPECT_EQ(x.shape(), (Shape{3, 3, 32, 32}));
  for (std::size_t n = 0; n < 3; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < 32 * 32; ++i) s += y[n * 1024 + i];
    EXPECT_NEAR(s, static_cast<double>(batch[n]->annotation.count()), 1e-4);
  }
}

TEST(Training, MismatchedPatchSizeIsRejected) {
  auto cfg = tiny_train();
  cfg.augment.patch_size = 40;
  EXPECT_THROW(train(tiny_data(), tiny_net(), cfg), UsageError);
}

TEST(Training, HistoryCsvFormat) {
  std::vector<LossRecord> h{{0, 0.5, 2.0}, {1, 0.25, 1.0}, {2, 0.125, 0.5}};
  EXPECT_EQ(loss_history_csv(h), "iteration,lr,loss\n0,0.5,2\n1,0.25,1\n2,0.125,0.5\n");
  EXPECT_EQ(loss_history_csv(h, 2), "iteration,lr,loss\n1,0.25,1\n2,0.125,0.5\n");
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  auto cfg = tiny_train();
  cfg.decay = DecaySchedule::kExponential;
  cfg.density = KnnSigma{4, 0.2, 5.0};
  EXPECT_TRUE(train_config_from_json(to_json(cfg)) == cfg);
  auto j = to_json(cfg);
  j["learning_rate"] = 1.0;
  EXPECT_THROW(train_config_from_json(j), UsageError);
  const auto net = tiny_net();
  EXPECT_EQ(net_config_from_json(to_json(net)), net);
  EXPECT_THROW(net_config_from_json(json{{"input_height", 30}}), UsageError);
}

TEST(Profiles, DeskAndFullAreConsistent) {
  for (const auto& name : {"desk", "full"}) {
    const auto p = profile_by_name(name);
    EXPECT_NO_THROW(validate(p.net));
    EXPECT_NO_THROW(validate(p.train));
    EXPECT_EQ(p.net.input_height, p.train.augment.patch_size);
  }
  const auto desk = profile_by_name("desk");
  EXPECT_EQ(desk.net.input_height, 64);
  EXPECT_DOUBLE_EQ(desk.net.width_multiplier, 0.125);
  EXPECT_EQ(desk.train.iterations, 2000);
  EXPECT_DOUBLE_EQ(desk.train.lr_initial, 3e-4);
  EXPECT_DOUBLE_EQ(desk.train.lr_final, 25e-6);
  EXPECT_EQ(desk.train.batch_size, 24);
  EXPECT_THROW(profile_by_name("huge"), UsageError);
  const auto patched = apply_config(desk, json{{"training", {{"iterations", 10}}}});
  EXPECT_EQ(patched.train.iterations, 10);
}

}  // namespace
}  // namespace deepstand
