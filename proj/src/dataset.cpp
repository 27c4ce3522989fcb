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

#include "iwan/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "iwan/error.hpp"

namespace iwan {

void LabeledDataset::validate() const {
  if (features.rows() == 0) throw DataError("dataset '" + provenance + "' is empty");
  if (labels.size() != features.rows()) {
    throw DataError("dataset '" + provenance + "': label count does not match row count");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw DataError("dataset '" + provenance + "': label " + std::to_string(y) +
                      " outside [0, " + std::to_string(class_count) + ")");
    }
  }
  if (!features.all_finite()) throw DataError("dataset '" + provenance + "' has non-finite features");
}

std::optional<LabeledDataset> evaluation_view(const UnlabeledDataset& target, int class_count) {
  if (!target.hidden_labels) return std::nullopt;
  LabeledDataset out{target.features, *target.hidden_labels, class_count, target.provenance};
  out.validate();
  return out;
}

void TaskSpec::validate() const {
  if (source_classes < 1 || target_classes < 1) throw ConfigError("task: class counts must be >= 1");
  if (target_classes > source_classes) {
    throw ConfigError("task: target_classes must not exceed source_classes");
  }
  if (samples_per_class_source < 1 || samples_per_class_target < 1) {
    throw ConfigError("task: samples per class must be >= 1");
  }
  if (!(class_stddev > 0.0)) throw ConfigError("task: class_stddev must be > 0");
  if (dim < 2 && rotation_degrees != 0.0) throw ConfigError("task: rotation needs dim >= 2");
  if (dim < 1) throw ConfigError("task: dim must be >= 1");
  if (shift.size() != dim) throw ConfigError("task: shift must have dim entries");
  if (!class_centers.empty()) {
    if (class_centers.size() != static_cast<std::size_t>(source_classes)) {
      throw ConfigError("task: need one center per source class");
    }
    for (const auto& c : class_centers)
      if (c.size() != dim) throw ConfigError("task: every center must have dim entries");
  }
}

std::vector<std::vector<double>> TaskSpec::centers() const {
  if (!class_centers.empty()) return class_centers;
  std::vector<std::vector<double>> out;
  for (int k = 0; k < source_classes; ++k) {
    std::vector<double> c(dim, 0.0);
    const double angle = 2.0 * std::numbers::pi * k / source_classes;
    c[0] = center_radius * std::cos(angle);
    if (dim > 1) c[1] = center_radius * std::sin(angle);
    out.push_back(std::move(c));
  }
  return out;
}

std::pair<LabeledDataset, UnlabeledDataset> generate(const TaskSpec& spec) {
  spec.validate();
  const auto centers = spec.centers();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.class_stddev);

  LabeledDataset source;
  source.class_count = spec.source_classes;
  source.provenance = "synthetic";
  const std::size_t ns = spec.samples_per_class_source * spec.source_classes;
  source.features = Array2(ns, spec.dim);
  std::size_t row = 0;
  for (int k = 0; k < spec.source_classes; ++k) {
    for (std::size_t i = 0; i < spec.samples_per_class_source; ++i, ++row) {
      for (std::size_t d = 0; d < spec.dim; ++d) source.features(row, d) = centers[k][d] + noise(rng);
      source.labels.push_back(k);
    }
  }

  UnlabeledDataset target;
  target.provenance = "synthetic";
  const std::size_t nt = spec.samples_per_class_target * spec.target_classes;
  target.features = Array2(nt, spec.dim);
  std::vector<int> hidden;
  const double theta = spec.rotation_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  row = 0;
  for (int k = 0; k < spec.target_classes; ++k) {
    for (std::size_t i = 0; i < spec.samples_per_class_target; ++i, ++row) {
      std::vector<double> x(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d) x[d] = centers[k][d] + noise(rng);
      if (spec.dim >= 2) {
        const double x0 = cs * x[0] - sn * x[1];
        const double x1 = sn * x[0] + cs * x[1];
        x[0] = x0;
        x[1] = x1;
      }
      for (std::size_t d = 0; d < spec.dim; ++d) target.features(row, d) = x[d] + spec.shift[d];
      hidden.push_back(k);
    }
  }
  target.hidden_labels = std::move(hidden);
  return {std::move(source), std::move(target)};
}

LabeledDataset restrict_classes(const LabeledDataset& dataset, const std::set<int>& kept) {
  if (kept.empty()) throw DataError("restrict_classes: kept set is empty");
  std::vector<int> remap(static_cast<std::size_t>(std::max(dataset.class_count, 0)), -1);
  int next = 0;
  for (int k : kept) {
    if (k < 0 || k >= dataset.class_count) {
      throw DataError("restrict_classes: class " + std::to_string(k) + " not in dataset");
    }
    remap[static_cast<std::size_t>(k)] = next++;
  }
  std::vector<std::size_t> rows;
  std::set<int> seen;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    if (remap[static_cast<std::size_t>(dataset.labels[i])] >= 0) {
      rows.push_back(i);
      seen.insert(dataset.labels[i]);
    }
  }
  for (int k : kept) {
    if (!seen.contains(k)) {
      throw DataError("restrict_classes: class " + std::to_string(k) + " has no samples");
    }
  }
  LabeledDataset out;
  out.features = gather_rows(dataset.features, rows);
  for (std::size_t i : rows) out.labels.push_back(remap[static_cast<std::size_t>(dataset.labels[i])]);
  out.class_count = static_cast<int>(kept.size());
  out.provenance = dataset.provenance;
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError(where + ": cannot parse number '" + s + "'");
  if (!std::isfinite(v)) throw DataError(where + ": non-finite feature value '" + s + "'");
  return v;
}

int parse_label(const std::string& s, const std::string& where) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || v < 0) {
    throw DataError(where + ": label must be a nonnegative integer, got '" + s + "'");
  }
  return v;
}

struct ParsedCsv {
  Array2 features;
  std::vector<int> labels;
};

ParsedCsv parse_csv(std::istream& in, const std::string& name, bool labeled) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  if (line.empty()) throw DataError(name + ": empty file");
  const auto header = split_fields(line);
  const bool has_label = !header.empty() && header.back() == "label";
  if (has_label != labeled) {
    throw DataError(name + ": " + (labeled ? "missing required" : "unexpected") + " label column");
  }
  const std::size_t dim = header.size() - (has_label ? 1 : 0);
  if (dim == 0) throw DataError(name + ": header names no feature columns");
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d] != "f" + std::to_string(d)) {
      throw DataError(name + ":" + std::to_string(line_no) + ": expected header column f" +
                      std::to_string(d) + ", got '" + header[d] + "'");
    }
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t d = 0; d < dim; ++d) values.push_back(parse_double(fields[d], where));
    if (has_label) labels.push_back(parse_label(fields.back(), where));
    ++rows;
  }
  if (rows == 0) throw DataError(name + ": empty file (header only)");
  return {Array2(rows, dim, std::move(values)), std::move(labels)};
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

}  // namespace

LabeledDataset read_labeled_csv(std::istream& in, const std::string& source_name) {
  auto parsed = parse_csv(in, source_name, true);
  LabeledDataset out;
  out.features = std::move(parsed.features);
  out.labels = std::move(parsed.labels);
  int max_label = 0;
  for (int y : out.labels) max_label = std::max(max_label, y);
  out.class_count = max_label + 1;
  out.provenance = source_name;
  return out;
}

UnlabeledDataset read_unlabeled_csv(std::istream& in, const std::string& source_name) {
  auto parsed = parse_csv(in, source_name, false);
  UnlabeledDataset out;
  out.features = std::move(parsed.features);
  out.provenance = source_name;
  return out;
}

LabeledDataset ingest_labeled_csv(const std::filesystem::path& path) {
  auto f = open_for_read(path);
  return read_labeled_csv(f, path.string());
}

UnlabeledDataset ingest_unlabeled_csv(const std::filesystem::path& path) {
  auto f = open_for_read(path);
  return read_unlabeled_csv(f, path.string());
}

std::vector<int> read_labels_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<int> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "label") throw DataError(source_name + ": expected header 'label'");
      header_seen = true;
      continue;
    }
    out.push_back(parse_label(line, source_name + ":" + std::to_string(line_no)));
  }
  if (out.empty()) throw DataError(source_name + ": empty labels file");
  return out;
}

std::vector<int> ingest_labels_csv(const std::filesystem::path& path) {
  auto f = open_for_read(path);
  return read_labels_csv(f, path.string());
}

void write_csv(std::ostream& out, const Array2& features, const std::vector<int>* labels) {
  for (std::size_t d = 0; d < features.cols(); ++d) out << (d ? "," : "") << 'f' << d;
  if (labels) out << ",label";
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t d = 0; d < features.cols(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", features(r, d));
      out << (d ? "," : "") << buf;
    }
    if (labels) out << ',' << (*labels)[r];
    out << '\n';
  }
}

void write_labels_csv(std::ostream& out, const std::vector<int>& labels) {
  out << "label\n";
  for (int y : labels) out << y << '\n';
}

void export_labeled_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
  auto f = open_for_write(path);
  write_csv(f, dataset.features, &dataset.labels);
}

void export_unlabeled_csv(const std::filesystem::path& path, const UnlabeledDataset& dataset,
                          const std::optional<std::filesystem::path>& labels_path) {
  auto f = open_for_write(path);
  write_csv(f, dataset.features, nullptr);
  if (labels_path && dataset.hidden_labels) {
    auto lf = open_for_write(*labels_path);
    write_labels_csv(lf, *dataset.hidden_labels);
  }
}

std::filesystem::path labels_sidecar_path(const std::filesystem::path& features_path) {
  auto p = features_path;
  p.replace_filename(features_path.stem().string() + ".labels.csv");
  return p;
}

}  // namespace iwan
