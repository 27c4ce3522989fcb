/* Copyright 2026 The IWAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <vector>

namespace iwan {

// Normalized per-source-sample importance weights for one batch.
struct ImportanceWeights {
  std::vector<double> values;
  // Mean of the raw weights (batch or smoothed) that `values` were divided by.
  double normalizer = 1.0;

  static ImportanceWeights ones(std::size_t n) { return {std::vector<double>(n, 1.0), 1.0}; }
  std::size_t size() const { return values.size(); }
  double mean() const;
};

// Raw weight 1 - d for each first-discriminator output d in (0, 1).
// The result is plain data: nothing here is taped, so no gradient can reach
// the discriminator through the weights.
std::vector<double> raw_weights(std::span<const double> d_outputs);

struct NormalizationMode {
  enum class Kind { batch, ema };
  Kind kind = Kind::batch;
  double beta = 0.99;  // smoothing factor, ema only

  static NormalizationMode batch() { return {Kind::batch, 0.99}; }
  static NormalizationMode ema(double beta) { return {Kind::ema, beta}; }
  bool operator==(const NormalizationMode&) const = default;
};

// Stateful normalizer. Batch mode divides by the batch mean. EMA mode keeps
// m <- beta * m + (1 - beta) * batch_mean (m starts at the first batch mean)
// and divides by m.
class WeightNormalizer {
 public:
  explicit WeightNormalizer(NormalizationMode mode = NormalizationMode::batch());

  ImportanceWeights normalize(std::span<const double> raw);
  const NormalizationMode& mode() const { return mode_; }
  std::optional<double> running_mean() const { return running_; }

 private:
  NormalizationMode mode_;
  std::optional<double> running_;
};

// Stateless batch-mode normalization.
ImportanceWeights normalize(std::span<const double> raw);

struct WeightStatistics {
  std::optional<double> mean_shared;
  std::optional<double> mean_outlier;
  // mean_outlier / mean_shared; absent if either group is empty.
  std::optional<double> ratio;
};

WeightStatistics weight_statistics(std::span<const double> weights, std::span<const int> labels,
                                   const std::set<int>& shared_classes);

struct WeightRecord {
  std::size_t epoch = 0;
  std::size_t sample_id = 0;
  double raw_weight = 0.0;
  double normalized_weight = 0.0;
  int label = 0;
  bool shared = false;
};

// CSV with header epoch,sample_id,raw_weight,normalized_weight,label,shared_flag.
void write_weights_csv(std::ostream& out, std::span<const WeightRecord> records);

}  // namespace iwan
