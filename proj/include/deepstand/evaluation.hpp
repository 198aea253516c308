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

#ifndef DEEPSTAND_EVALUATION_HPP_
#define DEEPSTAND_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "deepstand/training.hpp"

namespace deepstand {

struct EvalRecord {
  std::string image_id;
  double predicted = 0.0;     // density-integral count
  std::size_t ground_truth = 0;  // annotation count
  std::string class_tag;
};

/// Mean absolute count error.
inline double mae(const std::vector<EvalRecord>& records) {
  require(!records.empty(), "mae: empty record set");
  double s = 0.0;
  for (const auto& r : records) s += std::abs(r.predicted - static_cast<double>(r.ground_truth));
  return s / static_cast<double>(records.size());
}

/// Root mean squared count error.
inline double rmse(const std::vector<EvalRecord>& records) {
  require(!records.empty(), "rmse: empty record set");
  double s = 0.0;
  for (const auto& r : records) {
    const double e = r.predicted - static_cast<double>(r.ground_truth);
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(records.size()));
}

struct EvalRow {
  std::string split;
  std::size_t n = 0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // per-class rows (if requested), then "overall"
  std::vector<EvalRecord> records;

  const EvalRow& row(const std::string& split) const {
    for (const auto& r : rows)
      if (r.split == split) return r;
    throw UsageError("report has no row '" + split + "'");
  }
};

enum class SplitMode { kAll, kByClass };

/// Metrics over records, summed in image-id order so the result does not
/// depend on input order. Class rows list the stage tags first.
inline EvalReport summarize(std::vector<EvalRecord> records, SplitMode mode, bool rounded = false) {
  require(!records.empty(), "evaluation needs at least one record");
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& a, const EvalRecord& b) { return a.image_id < b.image_id; });
  std::vector<EvalRecord> scored = records;
  if (rounded)
    for (auto& r : scored) r.predicted = std::round(r.predicted);
  EvalReport report;
  if (mode == SplitMode::kByClass) {
    std::map<std::string, std::vector<EvalRecord>> by_tag;
    for (const auto& r : scored) {
      if (r.class_tag.empty()) throw DataError("image '" + r.image_id + "' has no class tag");
      by_tag[r.class_tag].push_back(r);
    }
    std::vector<std::string> order;
    for (const auto& t : stage_tags())
      if (by_tag.count(t)) order.push_back(t);
    for (const auto& [t, _] : by_tag)
      if (std::find(order.begin(), order.end(), t) == order.end()) order.push_back(t);
    for (const auto& t : order) report.rows.push_back({t, by_tag[t].size(), mae(by_tag[t]), rmse(by_tag[t])});
  }
  report.rows.push_back({"overall", scored.size(), mae(scored), rmse(scored)});
  report.records = std::move(records);
  return report;
}

/// Maps an image (and its annotation, for oracle modes) to a predicted count.
using CountPredictor = std::function<double(const Image&, const PointAnnotation&)>;

/// Whole-image, single forward pass with the checkpoint's network.
inline CountPredictor network_predictor(const Checkpoint& ck) {
  return [&ck](const Image& img, const PointAnnotation& ann) {
    if (img.height % 8 != 0 || img.width % 8 != 0) {
      throw UsageError("image '" + ann.image_id + "' is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + "; extents must be multiples of 8");
    }
    return predict_count(ck.params, ck.net, to_network_input<float>(img));
  };
}

/// Integrates the ground-truth density map; a perfect predictor.
inline CountPredictor oracle_predictor(SigmaMode density) {
  return [density](const Image& img, const PointAnnotation& ann) {
    return count_from_density(generate_density_map(ann, img.height, img.width, density));
  };
}

inline EvalReport evaluate(const CountPredictor& predictor, const Dataset& ds, SplitMode mode,
                           bool rounded = false) {
  require(ds.size() >= 1, "evaluation dataset is empty");
  std::vector<EvalRecord> records(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& a = ds.annotations[i];
    records[i] = {a.image_id, predictor(ds.images[i], a), a.count(), a.class_tag};
  }
  return summarize(std::move(records), mode, rounded);
}

inline EvalReport evaluate(const Checkpoint& ck, const Dataset& ds, SplitMode mode, bool rounded = false) {
  return evaluate(network_predictor(ck), ds, mode, rounded);
}

inline std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "split,N,MAE,RMSE\n" << std::fixed << std::setprecision(4);
  for (const auto& row : r.rows) os << row.split << ',' << row.n << ',' << row.mae << ',' << row.rmse << '\n';
  return os.str();
}

inline std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "split" << std::right << std::setw(6) << "N" << std::setw(10)
     << "MAE" << std::setw(10) << "RMSE" << '\n'
     << std::fixed << std::setprecision(4);
  for (const auto& row : r.rows)
    os << std::left << std::setw(10) << row.split << std::right << std::setw(6) << row.n
       << std::setw(10) << row.mae << std::setw(10) << row.rmse << '\n';
  return os.str();
}

}  // namespace deepstand

#endif  // DEEPSTAND_EVALUATION_HPP_
