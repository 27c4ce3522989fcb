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

#include "iwan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "iwan/error.hpp"
#include "iwan/weighting.hpp"
#include "json.hpp"

namespace iwan {

using json = nlohmann::ordered_json;

double round_report_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

namespace {

json num(double v) {
  if (!std::isfinite(v)) throw ContractError("report values must be finite");
  return round_report_value(v);
}

json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json key_values(const KeyValues& kv) {
  json out = json::object();
  for (const auto& [k, v] : kv) out[k] = v;
  return out;
}

KeyValues read_key_values(const json& j) {
  KeyValues out;
  for (const auto& [k, v] : j.items()) out.emplace_back(k, v.get<std::string>());
  return out;
}

json evaluation_json(const EvalResult& e) {
  json per_class = json::array();
  for (const auto& a : e.per_class_accuracy) per_class.push_back(opt(a));
  return {{"accuracy", num(e.accuracy)}, {"per_class_accuracy", per_class}, {"confusion", e.confusion}};
}

void check_fraction(const char* what, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ContractError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

}  // namespace

RunReport make_run_report(const TrainConfig& config, const KeyValues& task) {
  RunReport r;
  r.variant = config.weighted ? "weighted" : "unweighted";
  r.seed = config.seed;
  r.config = to_key_values(config);
  r.task = task;
  return r;
}

void record_epoch(RunReport& report, const AdaptEpochRecord& record) {
  const std::size_t expected = report.epochs.empty() ? 0 : report.epochs.back().epoch + 1;
  if (record.epoch != expected) {
    throw ContractError("record_epoch: expected epoch " + std::to_string(expected) + ", got " +
                        std::to_string(record.epoch));
  }
  if (record.target_accuracy) check_fraction("target_accuracy", *record.target_accuracy);
  report.epochs.push_back(record);
}

void record_pretrain_epoch(RunReport& report, const PretrainEpochRecord& record) {
  const std::size_t expected =
      report.pretrain_epochs.empty() ? 0 : report.pretrain_epochs.back().epoch + 1;
  if (record.epoch != expected) {
    throw ContractError("record_pretrain_epoch: expected epoch " + std::to_string(expected) +
                        ", got " + std::to_string(record.epoch));
  }
  check_fraction("source_accuracy", record.source_accuracy);
  report.pretrain_epochs.push_back(record);
}

void finalize(RunReport& report, const EvalResult& evaluation, std::span<const double> final_weights,
              std::span<const int> source_labels, const std::set<int>& shared_classes) {
  check_fraction("accuracy", evaluation.accuracy);
  FinalMetrics f;
  f.evaluation = evaluation;
  if (!final_weights.empty()) {
    const auto stats = weight_statistics(final_weights, source_labels, shared_classes);
    f.mean_shared_weight = stats.mean_shared;
    f.mean_outlier_weight = stats.mean_outlier;
    f.weight_ratio = stats.ratio;
  }
  report.final_metrics = std::move(f);
}

std::string serialize(const RunReport& r) {
  json doc;
  doc["schema_version"] = r.schema_version;
  doc["variant"] = r.variant;
  doc["seed"] = r.seed;
  doc["config"] = key_values(r.config);
  doc["task"] = key_values(r.task);
  doc["pretrain_epochs"] = json::array();
  for (const auto& e : r.pretrain_epochs) {
    doc["pretrain_epochs"].push_back({{"epoch", e.epoch},
                                      {"source_cls_loss", num(e.source_cls_loss)},
                                      {"source_accuracy", num(e.source_accuracy)}});
  }
  doc["epochs"] = json::array();
  for (const auto& e : r.epochs) {
    doc["epochs"].push_back({{"epoch", e.epoch},
                             {"lambda", num(e.lambda)},
                             {"d_loss", num(e.d_loss)},
                             {"d0_loss", num(e.d0_loss)},
                             {"entropy_loss", num(e.entropy_loss)},
                             {"weight_mean", num(e.weight_mean)},
                             {"weight_std", num(e.weight_std)},
                             {"mean_shared_weight", opt(e.mean_shared_weight)},
                             {"mean_outlier_weight", opt(e.mean_outlier_weight)},
                             {"target_accuracy", opt(e.target_accuracy)}});
  }
  if (r.final_metrics) {
    const auto& f = *r.final_metrics;
    json final_doc = evaluation_json(f.evaluation);
    final_doc["mean_shared_weight"] = opt(f.mean_shared_weight);
    final_doc["mean_outlier_weight"] = opt(f.mean_outlier_weight);
    final_doc["weight_ratio"] = opt(f.weight_ratio);
    doc["final"] = std::move(final_doc);
  } else {
    doc["final"] = nullptr;
  }
  doc["wall_time_seconds"] = num(r.wall_time_seconds);
  return doc.dump(2);
}

std::string serialize(const EvalResult& evaluation) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc.update(evaluation_json(evaluation));
  return doc.dump(2);
}

RunReport parse_run_report(const std::string& text) {
  RunReport r;
  try {
    const json doc = json::parse(text);
    r.schema_version = doc.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw DataError("unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.variant = doc.at("variant").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config = read_key_values(doc.at("config"));
    r.task = read_key_values(doc.at("task"));
    for (const auto& e : doc.at("pretrain_epochs")) {
      r.pretrain_epochs.push_back({e.at("epoch").get<std::size_t>(),
                                   e.at("source_cls_loss").get<double>(),
                                   e.at("source_accuracy").get<double>()});
    }
    for (const auto& e : doc.at("epochs")) {
      AdaptEpochRecord a;
      a.epoch = e.at("epoch").get<std::size_t>();
      a.lambda = e.at("lambda").get<double>();
      a.d_loss = e.at("d_loss").get<double>();
      a.d0_loss = e.at("d0_loss").get<double>();
      a.entropy_loss = e.at("entropy_loss").get<double>();
      a.weight_mean = e.at("weight_mean").get<double>();
      a.weight_std = e.at("weight_std").get<double>();
      a.mean_shared_weight = get_opt(e, "mean_shared_weight");
      a.mean_outlier_weight = get_opt(e, "mean_outlier_weight");
      a.target_accuracy = get_opt(e, "target_accuracy");
      r.epochs.push_back(a);
    }
    const auto& f = doc.at("final");
    if (!f.is_null()) {
      FinalMetrics m;
      m.evaluation.accuracy = f.at("accuracy").get<double>();
      for (const auto& a : f.at("per_class_accuracy")) {
        m.evaluation.per_class_accuracy.push_back(a.is_null() ? std::nullopt
                                                              : std::optional(a.get<double>()));
      }
      m.evaluation.confusion = f.at("confusion").get<std::vector<std::vector<std::size_t>>>();
      m.mean_shared_weight = get_opt(f, "mean_shared_weight");
      m.mean_outlier_weight = get_opt(f, "mean_outlier_weight");
      m.weight_ratio = get_opt(f, "weight_ratio");
      r.final_metrics = std::move(m);
    }
    r.wall_time_seconds = doc.at("wall_time_seconds").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

SweepReport summarize_sweep(std::span<const SweepRunResult> runs) {
  SweepReport out;
  // count descending, then variant name
  std::map<std::pair<int, std::string>, std::map<std::uint64_t, double>, std::greater<>> grouped;
  for (const auto& run : runs) {
    auto& cell = grouped[{run.target_class_count, run.variant}];
    if (!cell.emplace(run.seed, run.accuracy).second) {
      throw DataError("summarize_sweep: duplicate seed " + std::to_string(run.seed) +
                      " for count " + std::to_string(run.target_class_count));
    }
  }
  std::optional<std::vector<std::uint64_t>> seed_set;
  for (const auto& [key, by_seed] : grouped) {
    SweepCell cell;
    cell.target_class_count = key.first;
    cell.variant = key.second;
    for (const auto& [seed, acc] : by_seed) {
      cell.seeds.push_back(seed);
      cell.accuracies.push_back(acc);
    }
    if (seed_set && *seed_set != cell.seeds) {
      throw DataError("summarize_sweep: cells were run with different seed sets");
    }
    seed_set = cell.seeds;
    double total = 0.0;
    for (double a : cell.accuracies) total += a;
    cell.mean_accuracy = total / static_cast<double>(cell.accuracies.size());
    double sq = 0.0;
    for (double a : cell.accuracies) sq += (a - cell.mean_accuracy) * (a - cell.mean_accuracy);
    cell.std_accuracy = std::sqrt(sq / static_cast<double>(cell.accuracies.size()));
    out.cells.push_back(std::move(cell));
  }
  // std::greater on the pair orders variants descending; restore ascending names per count.
  std::stable_sort(out.cells.begin(), out.cells.end(), [](const SweepCell& a, const SweepCell& b) {
    if (a.target_class_count != b.target_class_count) {
      return a.target_class_count > b.target_class_count;
    }
    return a.variant < b.variant;
  });
  std::map<int, std::map<std::string, double>, std::greater<>> means;
  for (const auto& c : out.cells) means[c.target_class_count][c.variant] = c.mean_accuracy;
  for (const auto& [count, by_variant] : means) {
    auto w = by_variant.find("weighted");
    auto u = by_variant.find("unweighted");
    if (w != by_variant.end() && u != by_variant.end()) {
      out.gaps.push_back({count, w->second - u->second});
    }
  }
  return out;
}

std::string serialize(const SweepReport& r) {
  json doc;
  doc["schema_version"] = r.schema_version;
  doc["std_kind"] = "population";
  doc["config"] = key_values(r.config);
  doc["task"] = key_values(r.task);
  doc["cells"] = json::array();
  for (const auto& c : r.cells) {
    json accs = json::array();
    for (double a : c.accuracies) accs.push_back(num(a));
    doc["cells"].push_back({{"target_class_count", c.target_class_count},
                            {"variant", c.variant},
                            {"seeds", c.seeds},
                            {"accuracies", accs},
                            {"mean_accuracy", num(c.mean_accuracy)},
                            {"std_accuracy", num(c.std_accuracy)}});
  }
  doc["gaps"] = json::array();
  for (const auto& g : r.gaps) {
    doc["gaps"].push_back({{"target_class_count", g.target_class_count}, {"gap", num(g.gap)}});
  }
  return doc.dump(2);
}

}  // namespace iwan
