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
#include <vector>

#include "iwan/checkpoint.hpp"
#include "iwan/config.hpp"
#include "iwan/dataset.hpp"
#include "iwan/nets.hpp"
#include "iwan/report.hpp"
#include "iwan/weighting.hpp"

namespace iwan {

// Network names used in checkpoints.
inline constexpr const char* kSourceExtractor = "source_extractor";
inline constexpr const char* kTargetExtractor = "target_extractor";
inline constexpr const char* kClassifier = "classifier";
inline constexpr const char* kWeightDiscriminator = "weight_discriminator";
inline constexpr const char* kDomainDiscriminator = "domain_discriminator";

// 2u / (1 + exp(-alpha * p)) - u for progress p in [0, 1].
double lambda_schedule(double progress, double alpha, double upper);

MlpSpec feature_extractor_spec(std::size_t input_dim, const TrainConfig& config);
MlpSpec classifier_spec(std::size_t feature_dim, int class_count);
MlpSpec discriminator_spec(std::size_t feature_dim, const TrainConfig& config);

struct PretrainedModel {
  Mlp feature_extractor;
  Mlp classifier;
  std::vector<PretrainEpochRecord> history;

  // Networks stored as source_extractor and classifier.
  Checkpoint to_checkpoint() const;
  // Accepts pretrain or adapt checkpoints; DataError if either network is missing.
  static PretrainedModel from_checkpoint(const Checkpoint& checkpoint);
};

// Trains feature extractor + classifier on labelled source data with
// minibatch cross-entropy. Deterministic given config.seed.
PretrainedModel pretrain_source(const LabeledDataset& source, const TrainConfig& config);

// Per-batch trace of the adaptation loop.
struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double lambda = 0.0;
  double d_loss = 0.0;
  double d0_loss = 0.0;
  double entropy_loss = 0.0;
  double total_loss = 0.0;     // d0_loss + gamma * entropy_loss, as taped
  double weight_mean = 0.0;    // mean of the normalized weights applied
};

// Reporting hooks. None of these influence training.
struct AdaptMonitor {
  std::optional<LabeledDataset> target_eval;
  // Source classes known to appear in the target; only used for weight statistics.
  std::set<int> shared_classes;
  bool keep_weight_records = false;
};

struct TrainedModel {
  Mlp source_extractor;
  Mlp target_extractor;
  Mlp classifier;
  Mlp weight_discriminator;
  Mlp domain_discriminator;
  TrainConfig config;
  std::vector<PretrainEpochRecord> pretrain_history;
  std::vector<AdaptEpochRecord> history;
  std::vector<BatchRecord> batch_trace;
  std::vector<WeightRecord> weight_records;

  Checkpoint to_checkpoint() const;
};

// Staged adaptation. The target extractor starts as a copy of the source
// extractor; source extractor and classifier stay frozen. Each batch:
//   1. z_s from the frozen source extractor, z_t from the target extractor;
//   2. one SGD step of the weighting discriminator on the unweighted domain
//      loss, with both feature batches detached;
//   3. importance weights from the updated discriminator's outputs on z_s;
//   4. one SGD step on weighted adversarial loss (target path through a
//      gradient reversal layer scaled by the scheduled lambda) plus gamma
//      times target entropy, updating the domain discriminator and the
//      target extractor together.
// Throws DegenerateWeightsError if every source sample saturates the
// weighting discriminator, NumericalError on non-finite losses.
TrainedModel adapt(const PretrainedModel& pretrained, const LabeledDataset& source,
                   const UnlabeledDataset& target, const TrainConfig& config,
                   const AdaptMonitor& monitor = {});

// Predictions are argmax classifier(extractor(x)).
EvalResult evaluate(const Mlp& extractor, const Mlp& classifier, const LabeledDataset& eval);
EvalResult evaluate(const TrainedModel& model, const LabeledDataset& eval);

// Importance weights for every source sample under the model's current
// weighting discriminator, normalized over the whole source set.
ImportanceWeights source_weights(const TrainedModel& model, const LabeledDataset& source);

struct RunOutcome {
  TrainedModel model;
  RunReport report;
};

// pretrain (or reuse `pretrained`) + adapt + evaluate + finalize, i.e. what
// the CLI's adapt command does for one seed.
RunOutcome run_adaptation(const LabeledDataset& source, const UnlabeledDataset& target,
                          const TrainConfig& config, const KeyValues& task_echo = {},
                          const PretrainedModel* pretrained = nullptr,
                          bool keep_weight_records = false);

struct SweepOptions {
  std::vector<int> class_counts;  // strictly descending, each in [2, source_classes]
  std::vector<std::uint64_t> seeds;
  unsigned workers = 1;
};

struct SweepOutcome {
  std::vector<SweepRunResult> runs;
  SweepReport report;
};

// For every seed and count: regenerate the task with that many target
// classes (task seed and training seed both set to the run seed), pretrain
// once per seed, then run the weighted and unweighted variants.
SweepOutcome sweep_target_classes(const TaskSpec& base_task, const TrainConfig& config,
                                  const SweepOptions& options);

}  // namespace iwan
