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

// deepstand: synthesize datasets, train, predict, evaluate, render density maps.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "deepstand/deepstand.hpp"

namespace fs = std::filesystem;
using namespace deepstand;

namespace {

struct Common {
  std::string profile = "desk";
  std::string config;
  int threads = 0;

  Profile resolve() const {
    Profile p = profile_by_name(profile);
    if (!config.empty()) p = load_config_file(config, p);
    return p;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--profile", c.profile, "Built-in settings: desk or full")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  cmd->add_option("--config", c.config, "JSON config overlaid on the profile (flags win)");
  cmd->add_option("--threads", c.threads, "Worker cap for tensor ops (0 = all cores)");
}

void apply_threads(const Common& c) {
  if (c.threads > 0) set_num_threads(c.threads);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

Dataset select_subset(const Dataset& ds, const std::string& subset, double test_fraction,
                      std::uint64_t split_seed) {
  if (subset == "all") return ds;
  auto [train, test] = split_indices(ds.size(), test_fraction, split_seed);
  return ds.subset(subset == "train" ? train : test);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string out;
  int images = 250;
  std::optional<int> min_objects, max_objects;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  apply_threads(a.common);
  Profile p = a.common.resolve();
  if (a.min_objects) p.scene.min_objects = *a.min_objects;
  if (a.max_objects) p.scene.max_objects = *a.max_objects;
  validate(p.scene);
  require(a.images >= 1, "--images must be >= 1");
  const Dataset ds = synthesize_dataset(p.scene, a.images, a.seed);
  save_dataset(a.out, ds);
  std::cout << format_stats_table(dataset_stats(ds));
  return 0;
}

struct TrainArgs {
  Common common;
  std::string data, out, loss_csv, subset = "train";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  apply_threads(a.common);
  Profile p = a.common.resolve();
  if (a.seed) p.train.seed = *a.seed;
  if (a.iterations) p.train.iterations = *a.iterations;
  validate(p.train);
  const Dataset ds = select_subset(load_dataset(a.data), a.subset, a.test_fraction, a.split_seed);
  TrainOptions opts;
  opts.checkpoint_path = fs::path(a.out);
  const auto start = std::chrono::steady_clock::now();
  if (!a.quiet) {
    opts.on_iteration = [&](const LossRecord& r) {
      if ((r.iteration + 1) % p.train.checkpoint_every == 0 || r.iteration + 1 == p.train.iterations) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "iter " << r.iteration + 1 << "/" << p.train.iterations << "  lr " << r.lr
                  << "  loss " << r.loss << "  (" << std::fixed << std::setprecision(1) << secs
                  << "s)\n" << std::defaultfloat;
      }
    };
  }
  const TrainResult res = train(ds, p.net, p.train, opts);
  save_checkpoint(a.out, res.checkpoint);
  const std::string csv_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
  write_text(csv_path, loss_history_csv(res.history, p.train.checkpoint_every));
  std::cout << "wrote " << a.out << " and " << csv_path << '\n';
  return 0;
}

struct PredictArgs {
  Common common;
  std::string ckpt, image, out_json, out_heatmap, out_overlay, out_density;
};

int run_predict(const PredictArgs& a) {
  apply_threads(a.common);
  const Profile p = a.common.resolve();
  const Checkpoint ck = load_checkpoint(a.ckpt);
  const Image img = read_image(a.image);
  if (img.height % 8 != 0 || img.width % 8 != 0)
    throw UsageError("--image " + a.image + ": extents must be multiples of 8");
  const Tensor<float> pred = predict_density(ck.params, ck.net, to_network_input<float>(img));
  const DensityMap map = to_density_map(pred);
  const double integral = count_from_density(map);
  const Detections det = detect(map, p.post);

  json boxes = json::array();
  for (const auto& b : det.boxes) boxes.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"score", b.score}});
  const json out{{"image_id", fs::path(a.image).stem().string()},
                 {"count_integral", integral},
                 {"count_boxes", det.count},
                 {"boxes", boxes}};
  if (a.out_json.empty()) std::cout << out.dump(2) << '\n';
  else write_text(a.out_json, out.dump(2) + "\n");
  if (!a.out_heatmap.empty()) write_image(a.out_heatmap, render_heatmap(map));
  if (!a.out_overlay.empty()) write_image(a.out_overlay, render_overlay(img, det.boxes));
  if (!a.out_density.empty()) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (int y = 0; y < map.height(); ++y)
      for (int x = 0; x < map.width(); ++x) os << map.at(y, x) << (x + 1 == map.width() ? '\n' : ',');
    write_text(a.out_density, os.str());
  }
  return 0;
}

struct EvalArgs {
  Common common;
  std::string ckpt, data, out, split = "by_class", subset = "test";
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
  bool rounded = false, oracle = false;
};

int run_eval(const EvalArgs& a) {
  apply_threads(a.common);
  const Dataset ds = select_subset(load_dataset(a.data), a.subset, a.test_fraction, a.split_seed);
  const SplitMode mode = a.split == "by_class" ? SplitMode::kByClass : SplitMode::kAll;
  EvalReport report;
  if (a.oracle) {
    report = evaluate(oracle_predictor(a.common.resolve().train.density), ds, mode, a.rounded);
  } else {
    if (a.ckpt.empty()) throw UsageError("--ckpt is required unless --oracle is given");
    const Checkpoint ck = load_checkpoint(a.ckpt);
    report = evaluate(ck, ds, mode, a.rounded);
  }
  std::cout << report_table(report);
  if (!a.out.empty()) write_text(a.out, report_csv(report));
  return 0;
}

struct DensityArgs {
  Common common;
  std::string annotations, image_id, out;
};

int run_density(const DensityArgs& a) {
  const Profile p = a.common.resolve();
  for (const auto& ann : read_annotations(a.annotations)) {
    if (ann.image_id != a.image_id) continue;
    const DensityMap map = generate_density_map(ann, ann.height, ann.width, p.train.density);
    write_image(a.out, render_heatmap(map));
    std::cout << "count " << std::setprecision(10) << count_from_density(map) << '\n';
    return 0;
  }
  throw DataError("no annotation with id '" + a.image_id + "' in " + a.annotations);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepStand density-map counting toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Render a synthetic counting dataset and print its statistics");
  add_common(s, synth.common);
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--images", synth.images, "Number of images")->capture_default_str();
  s->add_option("--min-objects", synth.min_objects, "Fewest objects per image");
  s->add_option("--max-objects", synth.max_objects, "Most objects per image");
  s->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the density network");
  add_common(t, tr.common);
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--seed", tr.seed, "Training seed (overrides config)");
  t->add_option("--iterations", tr.iterations, "Iteration count (overrides config)");
  t->add_option("--loss-csv", tr.loss_csv, "Loss history CSV (default <out>.loss.csv)");
  t->add_option("--subset", tr.subset, "Images to train on: train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}))->capture_default_str();
  t->add_option("--split-seed", tr.split_seed, "Seed of the train/test split")->capture_default_str();
  t->add_option("--test-fraction", tr.test_fraction, "Share of images held out")->capture_default_str();
  t->add_flag("--quiet", tr.quiet, "No progress output");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Predict a density map, count and detections for one image");
  add_common(p, pr.common);
  p->add_option("--ckpt", pr.ckpt, "Checkpoint path")->required();
  p->add_option("--image", pr.image, "Input image (.png, .ppm, .pgm)")->required();
  p->add_option("--out-json", pr.out_json, "Detections JSON (default stdout)");
  p->add_option("--out-heatmap", pr.out_heatmap, "Color-mapped density map image");
  p->add_option("--out-overlay", pr.out_overlay, "Input image with detection boxes");
  p->add_option("--out-density", pr.out_density, "Raw density map as CSV");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "MAE/RMSE of predicted counts, overall and per class");
  add_common(e, ev.common);
  e->add_option("--ckpt", ev.ckpt, "Checkpoint path");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--split", ev.split, "Report layout: all or by_class")
      ->check(CLI::IsMember({"all", "by_class"}))->capture_default_str();
  e->add_option("--subset", ev.subset, "Images to score: train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}))->capture_default_str();
  e->add_option("--split-seed", ev.split_seed, "Seed of the train/test split")->capture_default_str();
  e->add_option("--test-fraction", ev.test_fraction, "Share of images held out")->capture_default_str();
  e->add_option("--out", ev.out, "Report CSV path");
  e->add_flag("--rounded", ev.rounded, "Round predicted counts before scoring");
  e->add_flag("--oracle", ev.oracle, "Score ground-truth density integrals instead of a network");

  DensityArgs de;
  auto* d = app.add_subcommand("density", "Render the ground-truth density map of one annotated image");
  add_common(d, de.common);
  d->add_option("--annotations", de.annotations, "annotations.json")->required();
  d->add_option("--image-id", de.image_id, "Image id")->required();
  d->add_option("--out", de.out, "Output heatmap image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s) return run_synth(synth);
    if (*t) return run_train(tr);
    if (*p) return run_predict(pr);
    if (*e) return run_eval(ev);
    if (*d) return run_density(de);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(err.kind());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(ErrorKind::kData);
  }
  return 1;
}
