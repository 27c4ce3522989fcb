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

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "iwan/checkpoint.hpp"
#include "iwan/config.hpp"
#include "iwan/dataset.hpp"
#include "iwan/error.hpp"
#include "iwan/oracle.hpp"
#include "iwan/pipeline.hpp"
#include "iwan/report.hpp"
#include "iwan/weighting.hpp"

namespace iwan::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << text << '\n';
  if (!f) throw DataError("failed writing " + path.string());
}

UnlabeledDataset load_target(const fs::path& path) {
  UnlabeledDataset target = ingest_unlabeled_csv(path);
  const fs::path labels = labels_sidecar_path(path);
  if (fs::exists(labels)) {
    auto hidden = ingest_labels_csv(labels);
    if (hidden.size() != target.size()) {
      throw DataError(labels.string() + ": " + std::to_string(hidden.size()) + " labels for " +
                      std::to_string(target.size()) + " target rows");
    }
    target.hidden_labels = std::move(hidden);
  }
  return target;
}

struct GenerateArgs {
  std::string spec_file;
  std::map<std::string, std::string> inline_keys;
  std::string out_source, out_target, out_target_labels;
};

int generate_data(const GenerateArgs& a, std::ostream& out) {
  TaskSpec spec = a.spec_file.empty() ? TaskSpec{} : load_task_spec(a.spec_file);
  for (const auto& [key, value] : a.inline_keys) apply_task_key(spec, key, value);
  spec.validate();
  const auto [source, target] = generate(spec);
  export_labeled_csv(a.out_source, source);
  std::optional<fs::path> labels;
  if (!a.out_target_labels.empty()) labels = a.out_target_labels;
  export_unlabeled_csv(a.out_target, target, labels);
  out << "generated source " << source.size() << "x" << source.dim() << " (" << source.class_count
      << " classes) -> " << a.out_source << "; target " << target.size() << "x" << target.dim()
      << " (" << spec.target_classes << " classes) -> " << a.out_target
      << (labels ? "; labels -> " + labels->string() : std::string()) << '\n';
  return kOk;
}

struct PretrainArgs {
  std::string config, source, checkpoint_out;
};

int pretrain(const PretrainArgs& a, std::ostream& out) {
  const TrainConfig config = load_train_config(a.config);
  const LabeledDataset source = ingest_labeled_csv(a.source);
  const PretrainedModel model = pretrain_source(source, config);
  Checkpoint checkpoint = model.to_checkpoint();
  checkpoint.metadata["config"] = format_config(config);
  save_checkpoint(a.checkpoint_out, checkpoint);
  const double accuracy = model.history.empty() ? 0.0 : model.history.back().source_accuracy;
  out << "pretrained " << config.pretrain_epochs << " epochs, source accuracy " << fixed(accuracy)
      << " -> " << a.checkpoint_out << '\n';
  return kOk;
}

struct AdaptArgs {
  std::string config, source, target, pretrained, out;
  std::string weights_csv, checkpoint_out;
  bool unweighted = false;
  std::optional<double> gamma;
};

int adapt_command(const AdaptArgs& a, std::ostream& out) {
  TrainConfig config = load_train_config(a.config);
  if (a.unweighted) config.weighted = false;
  if (a.gamma) config.gamma = *a.gamma;
  config.validate();
  const LabeledDataset source = ingest_labeled_csv(a.source);
  const UnlabeledDataset target = load_target(a.target);

  std::optional<PretrainedModel> pretrained;
  if (a.pretrained != "fresh") {
    pretrained = PretrainedModel::from_checkpoint(load_checkpoint(a.pretrained));
  }
  const RunOutcome run = run_adaptation(source, target, config, {},
                                        pretrained ? &*pretrained : nullptr, !a.weights_csv.empty());
  write_text(a.out, serialize(run.report));
  if (!a.weights_csv.empty()) {
    std::ofstream f(a.weights_csv);
    if (!f) throw DataError("cannot open " + a.weights_csv + " for writing");
    write_weights_csv(f, run.model.weight_records);
  }
  if (!a.checkpoint_out.empty()) save_checkpoint(a.checkpoint_out, run.model.to_checkpoint());

  out << "adapt " << run.report.variant << " seed " << config.seed << ", " << config.adapt_epochs
      << " epochs";
  if (const auto& f = run.report.final_metrics) {
    out << ": target accuracy " << fixed(f->evaluation.accuracy);
    if (f->weight_ratio) out << ", outlier/shared weight ratio " << fixed(*f->weight_ratio);
  }
  out << " -> " << a.out << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::string checkpoint, eval, out;
};

int evaluate_command(const EvaluateArgs& a, std::ostream& out) {
  const Checkpoint checkpoint = load_checkpoint(a.checkpoint);
  const Mlp* extractor = checkpoint.find(kTargetExtractor);
  if (extractor == nullptr) extractor = checkpoint.find(kSourceExtractor);
  if (extractor == nullptr) throw DataError(a.checkpoint + ": no feature extractor network");
  const LabeledDataset eval = ingest_labeled_csv(a.eval);
  const EvalResult result = evaluate(*extractor, checkpoint.at(kClassifier), eval);
  write_text(a.out, serialize(result));
  out << "accuracy " << fixed(result.accuracy) << " on " << eval.size() << " samples ("
      << extractor->name() << ") -> " << a.out << '\n';
  return kOk;
}

int oracle_check(const oracle::OracleCheckOptions& options, std::ostream& out, std::ostream& err) {
  const auto checks = oracle::run_oracle_checks(options);
  err << oracle::format_oracle_table(checks);
  std::size_t passed = 0;
  for (const auto& c : checks) passed += c.pass ? 1 : 0;
  out << "oracle-check: " << passed << "/" << checks.size() << " checks passed\n";
  return passed == checks.size() ? kOk : kUsageOrDataError;
}

struct SweepArgs {
  std::string config, task_spec, out;
  std::vector<int> counts;
  std::vector<std::uint64_t> seeds;
  unsigned workers = 0;
};

int sweep_command(const SweepArgs& a, std::ostream& out) {
  const TrainConfig config = load_train_config(a.config);
  const TaskSpec task = load_task_spec(a.task_spec);
  SweepOptions options{a.counts, a.seeds, a.workers};
  if (options.workers == 0) options.workers = std::max(1u, std::thread::hardware_concurrency());
  const SweepOutcome outcome = sweep_target_classes(task, config, options);
  write_text(a.out, serialize(outcome.report));
  out << "sweep " << a.counts.size() << " counts x 2 variants x " << a.seeds.size()
      << " seeds; gaps";
  for (const auto& g : outcome.report.gaps) {
    out << ' ' << g.target_class_count << ':' << (g.gap >= 0 ? "+" : "") << fixed(100.0 * g.gap, 2);
  }
  out << " points -> " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Importance-weighted adversarial partial domain adaptation", "iwan_cli"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate-data", "Generate a synthetic partial-adaptation task");
  gen_cmd->add_option("--spec", gen.spec_file, "Task spec file (key=value)")->check(CLI::ExistingFile);
  for (const auto& [key, value] : to_key_values(TaskSpec{})) {
    gen_cmd->add_option_function<std::string>(
        "--" + key, [&gen, key = key](const std::string& v) { gen.inline_keys[key] = v; },
        "Override " + key + " (default " + value + ")");
  }
  gen_cmd->add_option("--out-source", gen.out_source, "Labelled source CSV")->required();
  gen_cmd->add_option("--out-target", gen.out_target, "Unlabelled target CSV")->required();
  gen_cmd->add_option("--out-target-labels", gen.out_target_labels, "Hidden target labels CSV");

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Train source feature extractor and classifier");
  pre_cmd->add_option("--config", pre.config)->required()->check(CLI::ExistingFile);
  pre_cmd->add_option("--source", pre.source)->required()->check(CLI::ExistingFile);
  pre_cmd->add_option("--checkpoint-out", pre.checkpoint_out)->required();

  AdaptArgs ad;
  auto* ad_cmd = app.add_subcommand("adapt", "Adapt a target feature extractor");
  ad_cmd->add_option("--config", ad.config)->required()->check(CLI::ExistingFile);
  ad_cmd->add_option("--source", ad.source)->required()->check(CLI::ExistingFile);
  ad_cmd->add_option("--target", ad.target, "Target CSV; <stem>.labels.csv is read if present")
      ->required()
      ->check(CLI::ExistingFile);
  ad_cmd->add_option("--pretrained", ad.pretrained, "Pretrain checkpoint, or \"fresh\"")->required();
  ad_cmd->add_option("--out", ad.out, "Run report JSON")->required();
  auto* weights_opt = ad_cmd->add_option("--weights-csv", ad.weights_csv, "Per-batch weights CSV");
  ad_cmd->add_flag("--unweighted", ad.unweighted, "All weights fixed to 1")->excludes(weights_opt);
  ad_cmd->add_option("--gamma", ad.gamma, "Entropy coefficient override");
  ad_cmd->add_option("--checkpoint-out", ad.checkpoint_out, "Write all five networks");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on labelled data");
  ev_cmd->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--eval", ev.eval)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--out", ev.out)->required();

  oracle::OracleCheckOptions oc;
  auto* oc_cmd = app.add_subcommand("oracle-check", "Closed-form checks on Gaussian mixtures");
  oc_cmd->add_option("--grid-nodes", oc.grid_nodes, "Quadrature nodes (odd)")
      ->check(CLI::PositiveNumber);
  oc_cmd->add_option("--tolerance", oc.tolerance)->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Weighted vs unweighted over target class counts");
  sw_cmd->add_option("--config", sw.config)->required()->check(CLI::ExistingFile);
  sw_cmd->add_option("--task-spec", sw.task_spec)->required()->check(CLI::ExistingFile);
  sw_cmd->add_option("--counts", sw.counts, "e.g. 4,3,2")->required()->delimiter(',');
  sw_cmd->add_option("--seeds", sw.seeds, "e.g. 1,2,3")->required()->delimiter(',');
  sw_cmd->add_option("--out", sw.out)->required();
  sw_cmd->add_option("--workers", sw.workers, "Parallel runs (default: hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    err << "error: " << e.what() << "\n\n" << failing->help();
    return kUsageOrDataError;
  }

  try {
    if (*gen_cmd) return generate_data(gen, out);
    if (*pre_cmd) return pretrain(pre, out);
    if (*ad_cmd) return adapt_command(ad, out);
    if (*ev_cmd) return evaluate_command(ev, out);
    if (*oc_cmd) return oracle_check(oc, out, err);
    if (*sw_cmd) return sweep_command(sw, out);
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kNumericalAbort;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageOrDataError;
  }
  return kUsageOrDataError;
}

}  // namespace iwan::cli
