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

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "iwan/config.hpp"

namespace iwan {

inline constexpr int kReportSchemaVersion = 1;

struct PretrainEpochRecord {
  std::size_t epoch = 0;
  double source_cls_loss = 0.0;
  double source_accuracy = 0.0;
  bool operator==(const PretrainEpochRecord&) const = default;
};

struct AdaptEpochRecord {
  std::size_t epoch = 0;
  double lambda = 0.0;
  double d_loss = 0.0;        // first (weighting) discriminator
  double d0_loss = 0.0;       // weighted adversarial loss
  double entropy_loss = 0.0;  // target entropy, before the gamma factor
  double weight_mean = 0.0;
  double weight_std = 0.0;
  std::optional<double> mean_shared_weight;
  std::optional<double> mean_outlier_weight;
  std::optional<double> target_accuracy;
  bool operator==(const AdaptEpochRecord&) const = default;
};

struct EvalResult {
  double accuracy = 0.0;
  // Absent for classes with no evaluation samples.
  std::vector<std::optional<double>> per_class_accuracy;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  bool operator==(const EvalResult&) const = default;
};

struct FinalMetrics {
  EvalResult evaluation;
  std::optional<double> mean_shared_weight;
  std::optional<double> mean_outlier_weight;
  std::optional<double> weight_ratio;
  bool operator==(const FinalMetrics&) const = default;
};

struct RunReport {
  int schema_version = kReportSchemaVersion;
  std::string variant;  // "weighted" or "unweighted"
  std::uint64_t seed = 0;
  KeyValues config;
  KeyValues task;  // empty for ingested data
  std::vector<PretrainEpochRecord> pretrain_epochs;
  std::vector<AdaptEpochRecord> epochs;
  std::optional<FinalMetrics> final_metrics;
  double wall_time_seconds = 0.0;
  bool operator==(const RunReport&) const = default;
};

RunReport make_run_report(const TrainConfig& config, const KeyValues& task = {});

// Append-only; the record's epoch must be previous + 1 (0 for the first).
void record_epoch(RunReport& report, const AdaptEpochRecord& record);
void record_pretrain_epoch(RunReport& report, const PretrainEpochRecord& record);

// Stores the evaluation and the weight separation statistics of the final
// importance weights (one per source sample).
void finalize(RunReport& report, const EvalResult& evaluation, std::span<const double> final_weights,
              std::span<const int> source_labels, const std::set<int>& shared_classes);

// Stable key order; floating-point values rounded to 12 significant digits.
std::string serialize(const RunReport& report);
// {schema_version, accuracy, per_class_accuracy, confusion}.
std::string serialize(const EvalResult& evaluation);
RunReport parse_run_report(const std::string& json_text);

// Round to 12 significant digits, the precision reports are written at.
double round_report_value(double v);

struct SweepRunResult {
  int target_class_count = 0;
  std::string variant;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::optional<double> weight_ratio;
};

struct SweepCell {
  int target_class_count = 0;
  std::string variant;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // aligned with seeds
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over seeds
};

struct SweepGap {
  int target_class_count = 0;
  // mean("weighted") - mean("unweighted")
  double gap = 0.0;
};

struct SweepReport {
  int schema_version = kReportSchemaVersion;
  KeyValues config;
  KeyValues task;
  std::vector<SweepCell> cells;  // counts descending, then variant name
  std::vector<SweepGap> gaps;    // counts descending
};

// DataError if cells do not share the same seed set.
SweepReport summarize_sweep(std::span<const SweepRunResult> runs);
std::string serialize(const SweepReport& report);

}  // namespace iwan
