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

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "iwan/error.hpp"
#include "iwan/pipeline.hpp"

namespace iwan {

namespace {

std::vector<SweepRunResult> run_seed(const TaskSpec& base_task, const TrainConfig& base_config,
                                     const std::vector<int>& counts, std::uint64_t seed) {
  std::vector<SweepRunResult> out;
  TaskSpec task = base_task;
  task.seed = seed;
  TrainConfig config = base_config;
  config.seed = seed;

  // The source half of a generated task does not depend on target_classes,
  // so one pretrained model serves every count of this seed.
  std::optional<PretrainedModel> pretrained;
  for (int count : counts) {
    task.target_classes = count;
    const auto [source, target] = generate(task);
    if (!pretrained) pretrained = pretrain_source(source, config);
    for (bool weighted : {true, false}) {
      config.weighted = weighted;
      auto run = run_adaptation(source, target, config, to_key_values(task), &*pretrained);
      const auto& fm = *run.report.final_metrics;
      out.push_back({count, run.report.variant, seed, fm.evaluation.accuracy, fm.weight_ratio});
    }
  }
  return out;
}

}  // namespace

SweepOutcome sweep_target_classes(const TaskSpec& base_task, const TrainConfig& config,
                                  const SweepOptions& options) {
  base_task.validate();
  config.validate();
  for (std::size_t i = 0; i < options.class_counts.size(); ++i) {
    const int c = options.class_counts[i];
    if (c < 2) throw ConfigError("sweep: target class counts must be >= 2");
    if (c > base_task.source_classes) {
      throw ConfigError("sweep: target class count " + std::to_string(c) +
                        " exceeds source class count " + std::to_string(base_task.source_classes));
    }
    if (i > 0 && !(c < options.class_counts[i - 1])) {
      throw ConfigError("sweep: class counts must be strictly descending");
    }
  }
  SweepOutcome outcome;
  if (options.class_counts.empty() || options.seeds.empty()) {
    outcome.report = summarize_sweep(outcome.runs);
    return outcome;
  }

  std::vector<std::vector<SweepRunResult>> per_seed(options.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < options.seeds.size(); i = next++) {
      try {
        per_seed[i] = run_seed(base_task, config, options.class_counts, options.seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers,
                                                           static_cast<unsigned>(options.seeds.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& runs : per_seed) outcome.runs.insert(outcome.runs.end(), runs.begin(), runs.end());
  outcome.report = summarize_sweep(outcome.runs);
  outcome.report.config = to_key_values(config);
  outcome.report.task = to_key_values(base_task);
  return outcome;
}

}  // namespace iwan
