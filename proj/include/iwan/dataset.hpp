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
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iwan/array2.hpp"

namespace iwan {

struct LabeledDataset {
  Array2 features;  // n x d
  std::vector<int> labels;
  int class_count = 0;
  std::string provenance;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  // DataError unless labels are in [0, class_count), n >= 1 and features finite.
  void validate() const;
};

// Target-domain data. hidden_labels are carried for evaluation only; the
// training loop reads `features` and nothing else.
struct UnlabeledDataset {
  Array2 features;
  std::optional<std::vector<int>> hidden_labels;
  std::string provenance;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

// Labeled view of a target set for evaluation; empty if no hidden labels.
std::optional<LabeledDataset> evaluation_view(const UnlabeledDataset& target, int class_count);

// Controlled partial-adaptation task: Gaussian class blobs for the source,
// and for the target only the first target_classes classes, rotated about
// the origin (first two coordinates) and then translated by `shift`.
struct TaskSpec {
  int source_classes = 4;
  int target_classes = 2;
  std::size_t samples_per_class_source = 50;
  std::size_t samples_per_class_target = 50;
  std::size_t dim = 2;
  // Empty means: equally spaced on a circle of center_radius (first two dims).
  std::vector<std::vector<double>> class_centers;
  double center_radius = 4.0;
  double class_stddev = 0.6;
  std::vector<double> shift = {2.0, 1.0};
  double rotation_degrees = 20.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<std::vector<double>> centers() const;
};

std::pair<LabeledDataset, UnlabeledDataset> generate(const TaskSpec& spec);

// Keeps rows whose label is in `kept` and relabels them 0..|kept|-1 in
// ascending order of the kept labels.
LabeledDataset restrict_classes(const LabeledDataset& dataset, const std::set<int>& kept);

// CSV: header f0,...,f{d-1}[,label]; one sample per row.
LabeledDataset read_labeled_csv(std::istream& in, const std::string& source_name = "<stream>");
UnlabeledDataset read_unlabeled_csv(std::istream& in, const std::string& source_name = "<stream>");
LabeledDataset ingest_labeled_csv(const std::filesystem::path& path);
UnlabeledDataset ingest_unlabeled_csv(const std::filesystem::path& path);
// One-column CSV with header `label`.
std::vector<int> read_labels_csv(std::istream& in, const std::string& source_name = "<stream>");
std::vector<int> ingest_labels_csv(const std::filesystem::path& path);

void write_csv(std::ostream& out, const Array2& features, const std::vector<int>* labels);
void write_labels_csv(std::ostream& out, const std::vector<int>& labels);
void export_labeled_csv(const std::filesystem::path& path, const LabeledDataset& dataset);
// Writes features to `path`; hidden labels (if any) to labels_path.
void export_unlabeled_csv(const std::filesystem::path& path, const UnlabeledDataset& dataset,
                          const std::optional<std::filesystem::path>& labels_path);
// <dir>/<stem>.labels.csv
std::filesystem::path labels_sidecar_path(const std::filesystem::path& features_path);

}  // namespace iwan
