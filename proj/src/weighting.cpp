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

#include "iwan/weighting.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "iwan/error.hpp"

namespace iwan {

double ImportanceWeights::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<double> raw_weights(std::span<const double> d_outputs) {
  std::vector<double> out;
  out.reserve(d_outputs.size());
  for (double d : d_outputs) {
    if (!(d > 0.0 && d < 1.0)) {
      throw ContractError("raw_weights: discriminator output " + std::to_string(d) +
                          " outside (0, 1)");
    }
    out.push_back(1.0 - d);
  }
  return out;
}

namespace {

double checked_mean(std::span<const double> raw) {
  if (raw.empty()) throw ContractError("normalize: empty weight vector");
  double total = 0.0;
  for (double w : raw) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ContractError("normalize: raw weights must be finite and >= 0");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw DegenerateWeightsError(
        "normalize: all raw importance weights are zero; the weighting discriminator separates "
        "every source sample from the target");
  }
  return total / static_cast<double>(raw.size());
}

ImportanceWeights divide(std::span<const double> raw, double by) {
  ImportanceWeights w;
  w.normalizer = by;
  w.values.reserve(raw.size());
  for (double r : raw) w.values.push_back(r / by);
  return w;
}

}  // namespace

WeightNormalizer::WeightNormalizer(NormalizationMode mode) : mode_(mode) {
  if (mode_.kind == NormalizationMode::Kind::ema && !(mode_.beta >= 0.0 && mode_.beta < 1.0)) {
    throw ConfigError("ema normalization requires beta in [0, 1)");
  }
}

ImportanceWeights WeightNormalizer::normalize(std::span<const double> raw) {
  const double batch_mean = checked_mean(raw);
  if (mode_.kind == NormalizationMode::Kind::batch) return divide(raw, batch_mean);
  running_ = running_ ? mode_.beta * *running_ + (1.0 - mode_.beta) * batch_mean : batch_mean;
  return divide(raw, *running_);
}

ImportanceWeights normalize(std::span<const double> raw) { return divide(raw, checked_mean(raw)); }

WeightStatistics weight_statistics(std::span<const double> weights, std::span<const int> labels,
                                   const std::set<int>& shared_classes) {
  if (weights.size() != labels.size()) {
    throw DimensionError("weight_statistics: " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(labels.size()) + " labels");
  }
  double shared_sum = 0.0, outlier_sum = 0.0;
  std::size_t shared_n = 0, outlier_n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (shared_classes.contains(labels[i])) {
      shared_sum += weights[i];
      ++shared_n;
    } else {
      outlier_sum += weights[i];
      ++outlier_n;
    }
  }
  WeightStatistics s;
  if (shared_n > 0) s.mean_shared = shared_sum / static_cast<double>(shared_n);
  if (outlier_n > 0) s.mean_outlier = outlier_sum / static_cast<double>(outlier_n);
  if (s.mean_shared && s.mean_outlier && *s.mean_shared > 0.0) {
    s.ratio = *s.mean_outlier / *s.mean_shared;
  }
  return s;
}

void write_weights_csv(std::ostream& out, std::span<const WeightRecord> records) {
  out << "epoch,sample_id,raw_weight,normalized_weight,label,shared_flag\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%d,%d\n", r.epoch, r.sample_id,
                  r.raw_weight, r.normalized_weight, r.label, r.shared ? 1 : 0);
    out << buf;
  }
}

}  // namespace iwan
