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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "iwan/dataset.hpp"
#include "iwan/weighting.hpp"

namespace iwan {

// Every hyperparameter of a run. Field names double as the keys of the
// key=value config file.
struct TrainConfig {
  double gamma = 0.1;          // target entropy coefficient
  double lambda_upper = 0.1;   // reversal coefficient ceiling u
  double alpha = 1.0;          // schedule steepness
  std::size_t pretrain_epochs = 100;
  std::size_t adapt_epochs = 300;
  std::size_t batch_size = 32;
  double learning_rate_pretrain = 0.05;
  double learning_rate_adapt = 0.01;
  double momentum = 0.9;
  NormalizationMode weight_norm_mode = NormalizationMode::batch();
  bool weighted = true;
  std::uint64_t seed = 1;
  // Feature extractor widths after the input layer; the last is the feature dimension.
  std::vector<std::size_t> feature_widths = {64, 64, 16};
  // Hidden widths of both discriminators (output width is always 1).
  std::vector<std::size_t> discriminator_hidden = {64, 64};

  // ConfigError on any out-of-range field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Discriminator preset matching the 1024-1024-1 head used on deep features.
inline const std::vector<std::size_t> kWideDiscriminatorHidden = {1024, 1024};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Parses `key=value` lines. Blank lines and lines starting with '#' are
// skipped. ConfigError (with line number) on malformed or duplicate keys.
KeyValues parse_key_values(const std::string& text);

TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
// Applies one key; ConfigError for unknown keys or unparsable values.
void apply_config_key(TrainConfig& config, const std::string& key, const std::string& value);
KeyValues to_key_values(const TrainConfig& config);
std::string format_config(const TrainConfig& config);

TaskSpec parse_task_spec(const std::string& text);
TaskSpec load_task_spec(const std::filesystem::path& path);
void apply_task_key(TaskSpec& spec, const std::string& key, const std::string& value);
KeyValues to_key_values(const TaskSpec& spec);

std::string format_mode(const NormalizationMode& mode);
NormalizationMode parse_mode(const std::string& text);

}  // namespace iwan
