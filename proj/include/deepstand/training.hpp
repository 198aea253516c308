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

#ifndef DEEPSTAND_TRAINING_HPP_
#define DEEPSTAND_TRAINING_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deepstand/config.hpp"

namespace deepstand {

enum class DecaySchedule { kLinear, kExponential };

struct TrainConfig {
  double lr_initial = 3e-4;
  double lr_final = 25e-6;
  int batch_size = 24;
  int iterations = 80000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int checkpoint_every = 1000;
  DecaySchedule decay = DecaySchedule::kLinear;
  AugmentConfig augment;
  SigmaMode density = KnnSigma{};

  friend bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return to_json_string(a) == to_json_string(b);
  }
  static std::string to_json_string(const TrainConfig& c);
};

inline void validate(const TrainConfig& c) {
  require(c.lr_final >= 0.0 && c.lr_final <= c.lr_initial, "need 0 <= lr_final <= lr_initial");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.iterations >= 1, "iterations must be >= 1");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0,
          "Adam betas lie in [0, 1)");
  require(c.epsilon > 0.0, "Adam epsilon must be positive");
  require(c.checkpoint_every >= 1, "checkpoint_every must be >= 1");
  validate(c.augment);
}

inline json to_json(const TrainConfig& c) {
  return {{"lr_initial", c.lr_initial},
          {"lr_final", c.lr_final},
          {"batch_size", c.batch_size},
          {"iterations", c.iterations},
          {"adam_beta1", c.beta1},
          {"adam_beta2", c.beta2},
          {"adam_epsilon", c.epsilon},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"decay_schedule", c.decay == DecaySchedule::kLinear ? "linear" : "exponential"},
          {"augment", to_json(c.augment)},
          {"density", to_json(c.density)}};
}

inline std::string TrainConfig::to_json_string(const TrainConfig& c) { return to_json(c).dump(); }

inline TrainConfig train_config_from_json(const json& j, TrainConfig c = {}) {
  detail::check_keys(j, {"lr_initial", "lr_final", "batch_size", "iterations", "adam_beta1",
                         "adam_beta2", "adam_epsilon", "seed", "checkpoint_every",
                         "decay_schedule", "augment", "density"},
                     "training");
  detail::read_key(j, "lr_initial", c.lr_initial);
  detail::read_key(j, "lr_final", c.lr_final);
  detail::read_key(j, "batch_size", c.batch_size);
  detail::read_key(j, "iterations", c.iterations);
  detail::read_key(j, "adam_beta1", c.beta1);
  detail::read_key(j, "adam_beta2", c.beta2);
  detail::read_key(j, "adam_epsilon", c.epsilon);
  detail::read_key(j, "seed", c.seed);
  detail::read_key(j, "checkpoint_every", c.checkpoint_every);
  if (j.contains("decay_schedule")) {
    std::string s;
    detail::read_key(j, "decay_schedule", s);
    if (s == "linear") c.decay = DecaySchedule::kLinear;
    else if (s == "exponential") c.decay = DecaySchedule::kExponential;
    else throw UsageError("decay_schedule must be 'linear' or 'exponential'");
  }
  if (j.contains("augment")) c.augment = augment_config_from_json(j["augment"], c.augment);
  if (j.contains("density")) c.density = sigma_mode_from_json(j["density"]);
  validate(c);
  return c;
}

/// Learning rate at a 0-based iteration; hits lr_initial at 0 and lr_final at
/// iterations-1, monotone in between.
inline double lr_at(int iter, const TrainConfig& cfg) {
  require(iter >= 0 && iter < cfg.iterations,
          "iteration " + std::to_string(iter) + " outside [0, " + std::to_string(cfg.iterations) + ")");
  if (cfg.iterations == 1) return cfg.lr_initial;
  const double t = static_cast<double>(iter) / static_cast<double>(cfg.iterations - 1);
  if (iter == cfg.iterations - 1) return cfg.lr_final;
  if (cfg.decay == DecaySchedule::kLinear) return cfg.lr_initial + (cfg.lr_final - cfg.lr_initial) * t;
  if (cfg.lr_final <= 0.0) return cfg.lr_initial * (1.0 - t);
  return cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, t);
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
struct AdamMoments {
  Tensor<T> m;
  Tensor<T> v;
};

/// One bias-corrected Adam update of a single tensor at step t (1-based).
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamMoments<T>& mom, double lr,
               double beta1, double beta2, double eps, std::int64_t t) {
  require(t >= 1, "Adam step index must be >= 1");
  require(param.shape() == grad.shape(), "adam_step: gradient shape " + shape_str(grad.shape()) +
                                             " does not match parameter " + shape_str(param.shape()));
  if (mom.m.empty()) mom.m = Tensor<T>(param.shape());
  if (mom.v.empty()) mom.v = Tensor<T>(param.shape());
  require(mom.m.shape() == param.shape() && mom.v.shape() == param.shape(),
          "adam_step: moment shape mismatch");
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(beta1, static_cast<double>(t)));
  const T c2 = static_cast<T>(1.0 - std::pow(beta2, static_cast<double>(t)));
  const T step = static_cast<T>(lr), e = static_cast<T>(eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    mom.m[i] = b1 * mom.m[i] + (T{1} - b1) * g;
    mom.v[i] = b2 * mom.v[i] + (T{1} - b2) * g * g;
    const T mhat = mom.m[i] / c1, vhat = mom.v[i] / c2;
    param[i] -= step * mhat / (std::sqrt(vhat) + e);
  }
}

/// Optimizer state for every parameter tensor, in NetworkParams::tensors() order.
template <typename T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<AdamMoments<T>> moments;
};

/// Applies Adam to every parameter using its accumulated gradient. Missing
/// gradients count as zero. Aborts before touching anything if any gradient
/// is non-finite.
template <typename T>
void adam_update(NetworkParams<T>& params, AdamState<T>& state, double lr, const TrainConfig& cfg) {
  auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i]->has_grad() && !tensors[i]->grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter tensor " + std::to_string(i));
    }
  }
  if (state.moments.size() != tensors.size()) state.moments.assign(tensors.size(), {});
  ++state.step;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& var = *tensors[i];
    const Tensor<T>& g = var.has_grad() ? var.grad : var.grad_buffer();
    adam_step(var.value, g, state.moments[i], lr, cfg.beta1, cfg.beta2, cfg.epsilon, state.step);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  NetConfig net;
  TrainConfig train;
  std::int64_t iteration = 0;  // completed iterations
  NetworkParams<float> params;
  AdamState<float> adam;
  std::string rng_state;  // batch sampler state (std::mt19937_64 text form)
};

inline constexpr char kCheckpointMagic[8] = {'D', 'S', 'T', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void tensor(const std::string& name, const Tensor<float>& t) {
    str(name);
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) u32(static_cast<std::uint32_t>(d));
    u64(t.size());
    for (float f : t.data()) u32(std::bit_cast<std::uint32_t>(f));
  }

 private:
  void bytes(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os_.write(buf, n);
  }
  std::ostream& os_;
};

class LeReader {
 public:
  LeReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  std::string str(std::size_t limit = 1u << 26) {
    const std::uint32_t n = u32();
    if (n > limit) throw DataError(source_ + ": implausible string length (corrupt file)");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  std::pair<std::string, Tensor<float>> tensor() {
    std::string name = str(4096);
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > 8) throw DataError(source_ + ": bad tensor rank for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = u32();
    const std::uint64_t n = u64();
    if (n != shape_size(shape) || n > (1ull << 32))
      throw DataError(source_ + ": tensor '" + name + "' length does not match its shape");
    std::vector<float> vals(n);
    for (auto& f : vals) f = std::bit_cast<float>(u32());
    for (auto d : shape)
      if (d == 0) throw DataError(source_ + ": zero extent in tensor '" + name + "'");
    return {std::move(name), Tensor<float>(std::move(shape), std::move(vals))};
  }
  void read(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw DataError(source_ + ": truncated checkpoint");
  }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    read(reinterpret_cast<char*>(buf), n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& is_;
  std::string source_;
};

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  detail::LeWriter w(os);
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(to_json(ck.net).dump());
  w.str(to_json(ck.train).dump());
  w.u64(static_cast<std::uint64_t>(ck.iteration));
  w.u64(static_cast<std::uint64_t>(ck.adam.step));
  w.str(ck.rng_state);
  const auto tensors = ck.params.tensors();
  const bool has_moments = ck.adam.moments.size() == tensors.size();
  w.u32(static_cast<std::uint32_t>(tensors.size() * (has_moments ? 3 : 1)));
  std::size_t i = 0;
  for (const auto& l : ck.params.layers) {
    for (const auto* suffix : {".kernel", ".bias"}) {
      const std::string name = l.name + suffix;
      w.tensor(name, tensors[i]->value);
      if (has_moments) {
        const auto& mom = ck.adam.moments[i];
        w.tensor("adam_m/" + name, mom.m.empty() ? Tensor<float>(tensors[i]->value.shape()) : mom.m);
        w.tensor("adam_v/" + name, mom.v.empty() ? Tensor<float>(tensors[i]->value.shape()) : mom.v);
      }
      ++i;
    }
  }
}

inline Checkpoint read_checkpoint(std::istream& is, const std::string& source = "checkpoint") {
  detail::LeReader r(is, source);
  char magic[sizeof kCheckpointMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw DataError(source + ": bad magic (not a checkpoint file)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError(source + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  try {
    ck.net = net_config_from_json(json::parse(r.str()));
    ck.train = train_config_from_json(json::parse(r.str()));
  } catch (const json::exception& e) {
    throw DataError(source + ": corrupt embedded config: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(source + ": invalid embedded config: " + e.what());
  }
  ck.iteration = static_cast<std::int64_t>(r.u64());
  ck.adam.step = static_cast<std::int64_t>(r.u64());
  ck.rng_state = r.str();

  const auto plan = layer_plan(ck.net);
  const std::uint32_t count = r.u32();
  const std::size_t n_tensors = plan.size() * 2;
  const bool has_moments = count == n_tensors * 3;
  if (count != n_tensors && !has_moments)
    throw DataError(source + ": tensor count " + std::to_string(count) + " does not match config");
  if (has_moments) ck.adam.moments.resize(n_tensors);
  std::size_t ti = 0;
  for (const auto& entry : plan) {
    Layer<float> layer{entry.name, entry.kind, nullptr, nullptr};
    for (const auto* suffix : {".kernel", ".bias"}) {
      const std::string name = entry.name + suffix;
      auto [pname, value] = r.tensor();
      if (pname != name) throw DataError(source + ": expected tensor '" + name + "', found '" + pname + "'");
      const Shape want = suffix[1] == 'k' ? entry.kernel_shape
                                          : Shape{entry.kind == LayerKind::kConv ? entry.kernel_shape[0]
                                                                                : entry.kernel_shape[1]};
      if (value.shape() != want)
        throw DataError(source + ": shape mismatch for '" + name + "': file " + shape_str(value.shape()) +
                        ", config " + shape_str(want));
      if (has_moments) {
        auto [mname, m] = r.tensor();
        auto [vname, v] = r.tensor();
        if (mname != "adam_m/" + name || vname != "adam_v/" + name || m.shape() != want ||
            v.shape() != want)
          throw DataError(source + ": malformed optimizer state for '" + name + "'");
        ck.adam.moments[ti] = {std::move(m), std::move(v)};
      }
      (suffix[1] == 'k' ? layer.kernel : layer.bias) = make_var(std::move(value), true);
      ++ti;
    }
    ck.params.layers.push_back(std::move(layer));
  }
  validate_params(ck.params, ck.net);
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(os, ck);
  if (!os) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(is, path.string());
}

// ---------------------------------------------------------------------------
// Training loop

struct LossRecord {
  std::int64_t iteration = 0;  // 0-based
  double lr = 0.0;
  double loss = 0.0;
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// Augmented training patches, built deterministically from the seed.
/// Image i, scale s uses the RNG stream mix_seed(seed, i, s).
inline std::vector<Sample> build_patch_pool(const Dataset& train_set, const AugmentConfig& cfg,
                                            std::uint64_t seed) {
  validate(cfg);
  std::vector<std::vector<Sample>> per_image(train_set.size());
  parallel_for(train_set.size(), [&](std::size_t i) {
    const auto levels = pyramid_scales(train_set.images[i], train_set.annotations[i], cfg.scales);
    for (std::size_t s = 0; s < levels.size(); ++s) {
      const Image& img = levels[s].image;
      if (img.height < cfg.patch_size || img.width < cfg.patch_size) continue;
      auto patches = sample_patches(img, levels[s].annotation, cfg, mix_seed(seed, i, s));
      for (auto& p : patches) per_image[i].push_back(std::move(p));
    }
  });
  std::vector<Sample> pool;
  for (auto& v : per_image)
    for (auto& p : v) pool.push_back(std::move(p));
  return pool;
}

/// Stacks patches into an image batch and their ground-truth density maps.
inline std::pair<Tensor<float>, Tensor<float>> make_batch(const std::vector<const Sample*>& samples,
                                                          const SigmaMode& density) {
  std::vector<const Image*> imgs;
  for (const auto* s : samples) imgs.push_back(&s->image);
  Tensor<float> x = to_network_input<float>(imgs);
  const std::size_t h = x.dim(2), w = x.dim(3);
  Tensor<float> y({samples.size(), 1, h, w});
  parallel_for(samples.size(), [&](std::size_t n) {
    const DensityMap d = generate_density_map(samples[n]->annotation.points, static_cast<int>(h),
                                              static_cast<int>(w), density);
    for (std::size_t i = 0; i < h * w; ++i) y[n * h * w + i] = static_cast<float>(d.values()[i]);
  });
  return {std::move(x), std::move(y)};
}

/// Forward, loss and backward on one batch. Gradients accumulate into params.
inline double loss_and_gradients(NetworkParams<float>& params, const NetConfig& net,
                                 const Tensor<float>& images, const Tensor<float>& targets) {
  Graph<float> graph;
  auto pred = forward(graph, params, net, make_var(images));
  auto loss = sse_loss(graph, pred, make_var(targets));
  const double value = loss->value[0];
  if (!std::isfinite(value)) throw NumericError("non-finite loss");
  graph.backward(loss);
  return value;
}

struct TrainOptions {
  /// Stop after this many iterations in this call (resume later); -1 runs to the end.
  std::int64_t max_iterations = -1;
  /// Where to save periodic checkpoints (every checkpoint_every iterations).
  std::optional<std::filesystem::path> checkpoint_path;
  /// Called after every iteration.
  std::function<void(const LossRecord&)> on_iteration;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> history;  // every iteration run in this call
};

inline std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Checkpoint initial_checkpoint(const NetConfig& net, const TrainConfig& cfg) {
  validate(net);
  validate(cfg);
  Checkpoint ck;
  ck.net = net;
  ck.train = cfg;
  ck.params = build_network<float>(net, mix_seed(cfg.seed, 0x1417));
  ck.rng_state = rng_text(std::mt19937_64(mix_seed(cfg.seed, 0xba7c4)));
  return ck;
}

/// Optimizes the network on train_set. Starts fresh, or continues from resume
/// (its embedded configs are used). Deterministic for a given seed.
inline TrainResult train(const Dataset& train_set, const NetConfig& net, const TrainConfig& cfg,
                         const TrainOptions& opts = {}, std::optional<Checkpoint> resume = std::nullopt) {
  require(train_set.size() >= 1, "training set is empty");
  TrainResult result;
  result.checkpoint = resume ? std::move(*resume) : initial_checkpoint(net, cfg);
  Checkpoint& ck = result.checkpoint;
  const TrainConfig& tc = ck.train;
  require(ck.net.input_height == tc.augment.patch_size && ck.net.input_width == tc.augment.patch_size,
          "network input size must equal the augmentation patch size");

  const auto pool = build_patch_pool(train_set, tc.augment, tc.seed);
  if (pool.empty()) throw UsageError("no training patches: every scale is smaller than patch_size");

  std::mt19937_64 rng;
  {
    std::istringstream is(ck.rng_state);
    is >> rng;
    if (!is) throw DataError("corrupt sampler state in checkpoint");
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

  std::int64_t end = tc.iterations;
  if (opts.max_iterations >= 0) end = std::min<std::int64_t>(end, ck.iteration + opts.max_iterations);
  for (std::int64_t it = ck.iteration; it < end; ++it) {
    std::vector<const Sample*> batch;
    for (int b = 0; b < tc.batch_size; ++b) batch.push_back(&pool[pick(rng)]);
    const auto [x, y] = make_batch(batch, tc.density);
    ck.params.zero_grad();
    double loss = 0.0;
    try {
      loss = loss_and_gradients(ck.params, ck.net, x, y);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(it));
    }
    const double lr = lr_at(static_cast<int>(it), tc);
    adam_update(ck.params, ck.adam, lr, tc);
    ck.iteration = it + 1;
    LossRecord rec{it, lr, loss};
    result.history.push_back(rec);
    if (opts.on_iteration) opts.on_iteration(rec);
    if (opts.checkpoint_path && (ck.iteration % tc.checkpoint_every == 0)) {
      ck.rng_state = rng_text(rng);
      save_checkpoint(*opts.checkpoint_path, ck);
    }
  }
  ck.rng_state = rng_text(rng);
  ck.params.zero_grad();
  return result;
}

/// CSV with header iteration,lr,loss; rows where (iteration+1) % every == 0
/// plus the final row.
inline std::string loss_history_csv(const std::vector<LossRecord>& history, int every = 1) {
  std::ostringstream os;
  os << "iteration,lr,loss\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& r = history[i];
    if ((r.iteration + 1) % every == 0 || i + 1 == history.size())
      os << r.iteration << ',' << r.lr << ',' << r.loss << '\n';
  }
  return os.str();
}

}  // namespace deepstand

#endif  // DEEPSTAND_TRAINING_HPP_
