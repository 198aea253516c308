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

// Minimal library walk-through: synthesize a few scenes, train a small
// network for a handful of iterations, then count and detect on one image.
//
//   count_example [iterations]

#include <cstdlib>
#include <iostream>

#include "deepstand/deepstand.hpp"

int main(int argc, char** argv) {
  using namespace deepstand;
  try {
    Profile p = desk_profile();
    p.train.iterations = argc > 1 ? std::atoi(argv[1]) : 50;

    const Dataset data = synthesize_dataset(p.scene, 20, 1);
    std::cout << format_stats_table(dataset_stats(data)) << '\n';

    const auto [train_idx, test_idx] = split_indices(data.size(), 0.2, 1);
    const Dataset train_set = data.subset(train_idx);
    const Dataset test_set = data.subset(test_idx);

    const TrainResult res = train(train_set, p.net, p.train);
    std::cout << "final loss " << res.history.back().loss << "\n\n";

    const Checkpoint& ck = res.checkpoint;
    std::cout << report_table(evaluate(ck, test_set, SplitMode::kAll)) << '\n';

    const Image& img = test_set.images.front();
    const DensityMap map = to_density_map(predict_density(ck.params, ck.net, to_network_input<float>(img)));
    const Detections det = detect(map, p.post);
    std::cout << test_set.annotations.front().image_id << ": " << test_set.annotations.front().count()
              << " objects, density integral " << count_from_density(map) << ", " << det.count << " boxes\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  }
  return 0;
}
