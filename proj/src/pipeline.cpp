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

#include "iwan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "iwan/error.hpp"

namespace iwan {

double lambda_schedule(double progress, double alpha, double upper) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw ContractError("lambda_schedule: progress must lie in [0, 1], got " +
                        std::to_string(progress));
  }
  return 2.0 * upper / (1.0 + std::exp(-alpha * progress)) - upper;
}

MlpSpec feature_extractor_spec(std::size_t input_dim, const TrainConfig& config) {
  MlpSpec spec;
  spec.layer_widths.push_back(input_dim);
  spec.layer_widths.insert(spec.layer_widths.end(), config.feature_widths.begin(),
                           config.feature_widths.end());
  spec.output_head = OutputHead::linear;
  return spec;
}

MlpSpec classifier_spec(std::size_t feature_dim, int class_count) {
  return {{feature_dim, static_cast<std::size_t>(class_count)}, OutputHead::softmax};
}

MlpSpec discriminator_spec(std::size_t feature_dim, const TrainConfig& config) {
  MlpSpec spec;
  spec.layer_widths.push_back(feature_dim);
  spec.layer_widths.insert(spec.layer_widths.end(), config.discriminator_hidden.begin(),
                           config.discriminator_hidden.end());
  spec.layer_widths.push_back(1);
  spec.output_head = OutputHead::sigmoid;
  return spec;
}

namespace {

void check_finite_loss(const Var& loss, const char* what) {
  if (!std::isfinite(loss.value()[0])) {
    throw NumericalError(std::string(what) + ": loss became non-finite");
  }
}

std::vector<Parameter*> concat_parameters(Mlp& a, Mlp& b) {
  auto out = a.parameters();
  auto more = b.parameters();
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<double> column_values(const Array2& a) {
  return std::vector<double>(a.values().begin(), a.values().end());
}

// Discriminator outputs clamped like every probability entering a log.
std::vector<double> clamped_outputs(const Array2& d) {
  std::vector<double> out = column_values(d);
  for (double& v : out) v = std::clamp(v, kProbabilityFloor, 1.0 - kProbabilityFloor);
  return out;
}

std::vector<double> checked_raw_weights(const Array2& d_outputs) {
  auto raw = raw_weights(clamped_outputs(d_outputs));
  const bool saturated = std::all_of(raw.begin(), raw.end(),
                                     [](double w) { return w <= 1.5 * kProbabilityFloor; });
  if (saturated) {
    throw DegenerateWeightsError(
        "weighting discriminator saturated on every source sample in the batch; all importance "
        "weights vanish");
  }
  return raw;
}

}  // namespace

PretrainedModel pretrain_source(const LabeledDataset& source, const TrainConfig& config) {
  config.validate();
  source.validate();
  if (source.class_count < 2) throw DataError("pretrain_source: need at least 2 classes");

  std::mt19937_64 rng(config.seed);
  PretrainedModel out{
      init_mlp(kSourceExtractor, feature_extractor_spec(source.dim(), config), rng),
      init_mlp(kClassifier, classifier_spec(config.feature_widths.back(), source.class_count), rng),
      {}};
  const auto params = concat_parameters(out.feature_extractor, out.classifier);
  auto order = iota_indices(source.size());

  for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> labels;
      for (std::size_t i : idx) labels.push_back(source.labels[i]);

      Tape tape;
      Var x = tape.constant(gather_rows(source.features, idx));
      Var loss = source_classification_loss(tape, out.classifier,
                                            out.feature_extractor.forward(tape, x), labels);
      check_finite_loss(loss, "pretrain_source");
      tape.backward(loss);
      sgd_step(params, config.learning_rate_pretrain, config.momentum);
      loss_total += loss.value()[0];
      ++batches;
    }
    out.history.push_back({epoch, loss_total / static_cast<double>(batches),
                           evaluate(out.feature_extractor, out.classifier, source).accuracy});
  }
  return out;
}

Checkpoint PretrainedModel::to_checkpoint() const {
  Checkpoint c;
  c.networks = {feature_extractor, classifier};
  c.metadata["stage"] = "pretrain";
  return c;
}

PretrainedModel PretrainedModel::from_checkpoint(const Checkpoint& checkpoint) {
  const Mlp* extractor = checkpoint.find(kSourceExtractor);
  const Mlp* classifier = checkpoint.find(kClassifier);
  if (extractor == nullptr || classifier == nullptr) {
    throw DataError(std::string("checkpoint lacks a ") + kSourceExtractor + " or " + kClassifier +
                    " network");
  }
  return {*extractor, *classifier, {}};
}

Checkpoint TrainedModel::to_checkpoint() const {
  Checkpoint c;
  c.networks = {source_extractor, target_extractor, classifier, weight_discriminator,
                domain_discriminator};
  c.metadata["stage"] = "adapt";
  c.metadata["config"] = format_config(config);
  return c;
}

TrainedModel adapt(const PretrainedModel& pretrained, const LabeledDataset& source,
                   const UnlabeledDataset& target, const TrainConfig& config,
                   const AdaptMonitor& monitor) {
  config.validate();
  source.validate();
  if (target.size() == 0) throw DataError("adapt: target set is empty");
  if (!target.features.all_finite()) throw DataError("adapt: target has non-finite features");
  const std::size_t in_dim = pretrained.feature_extractor.spec().input_width();
  if (source.dim() != in_dim || target.dim() != in_dim) {
    throw DataError("adapt: source/target dimensions (" + std::to_string(source.dim()) + ", " +
                    std::to_string(target.dim()) + ") do not match the extractor input " +
                    std::to_string(in_dim));
  }
  if (config.batch_size > std::min(source.size(), target.size())) {
    throw ConfigError("batch_size " + std::to_string(config.batch_size) +
                      " exceeds min(n_source, n_target)");
  }

  TrainedModel m;
  m.config = config;
  m.pretrain_history = pretrained.history;
  m.source_extractor = pretrained.feature_extractor;
  m.classifier = pretrained.classifier;
  m.source_extractor.set_trainable(false);
  m.classifier.set_trainable(false);
  m.target_extractor = Mlp(kTargetExtractor, m.source_extractor.spec());
  clone_parameters(m.source_extractor, m.target_extractor);
  m.target_extractor.set_trainable(true);

  std::seed_seq seq{config.seed, std::uint64_t{0xada97}};
  std::mt19937_64 rng(seq);
  const std::size_t feature_dim = m.source_extractor.spec().output_width();
  m.weight_discriminator =
      init_mlp(kWeightDiscriminator, discriminator_spec(feature_dim, config), rng);
  m.domain_discriminator =
      init_mlp(kDomainDiscriminator, discriminator_spec(feature_dim, config), rng);

  const auto d_params = m.weight_discriminator.parameters();
  const auto adv_params = concat_parameters(m.domain_discriminator, m.target_extractor);
  WeightNormalizer normalizer(config.weight_norm_mode);

  const std::size_t bs = config.batch_size;
  const std::size_t ns = source.size();
  const std::size_t nt = target.size();
  const std::size_t batches = ns / bs;
  auto source_order = iota_indices(ns);
  auto target_order = iota_indices(nt);
  std::uniform_int_distribution<std::size_t> pick_target(0, nt - 1);

  for (std::size_t epoch = 0; epoch < config.adapt_epochs; ++epoch) {
    const double progress = static_cast<double>(epoch) / static_cast<double>(config.adapt_epochs);
    const double lambda = lambda_schedule(progress, config.alpha, config.lambda_upper);
    std::shuffle(source_order.begin(), source_order.end(), rng);
    if (ns == nt) std::shuffle(target_order.begin(), target_order.end(), rng);

    AdaptEpochRecord rec;
    rec.epoch = epoch;
    rec.lambda = lambda;
    std::vector<double> epoch_weights;
    std::vector<int> epoch_labels;

    for (std::size_t b = 0; b < batches; ++b) {
      const std::span<const std::size_t> idx_s(source_order.data() + b * bs, bs);
      std::vector<std::size_t> idx_t(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        idx_t[i] = ns == nt ? target_order[b * bs + i] : pick_target(rng);
      }
      const Array2 zs = m.source_extractor.predict(gather_rows(source.features, idx_s));

      Tape tape;
      Var zt = m.target_extractor.forward(tape, tape.constant(gather_rows(target.features, idx_t)));

      // Weighting discriminator: unweighted loss, features detached.
      double d_loss = 0.0;
      {
        Tape dtape;
        Var loss = domain_adversarial_loss(dtape, m.weight_discriminator, dtape.constant(zs),
                                           dtape.constant(zt.value()));
        check_finite_loss(loss, "adapt (weighting discriminator)");
        dtape.backward(loss);
        sgd_step(d_params, config.learning_rate_adapt, config.momentum);
        d_loss = loss.value()[0];
      }

      std::vector<double> raw;
      ImportanceWeights weights;
      if (config.weighted) {
        raw = checked_raw_weights(m.weight_discriminator.predict(zs));
        weights = normalizer.normalize(raw);
      } else {
        weights = ImportanceWeights::ones(bs);
        raw.assign(bs, 1.0);
      }

      Var adv = weighted_domain_adversarial_loss(tape, m.domain_discriminator, tape.constant(zs),
                                                 weights, zt, lambda);
      Var total = adv;
      double entropy = 0.0;
      if (config.gamma > 0.0) {
        Var h = target_entropy_loss(tape, m.classifier, zt);
        entropy = h.value()[0];
        total = add(adv, scale(h, config.gamma));
      } else {
        Tape scratch;
        entropy = target_entropy_loss(scratch, m.classifier, scratch.constant(zt.value())).value()[0];
      }
      check_finite_loss(total, "adapt (adversarial step)");
      tape.backward(total);
      sgd_step(adv_params, config.learning_rate_adapt, config.momentum);

      m.batch_trace.push_back({epoch, b, lambda, d_loss, adv.value()[0], entropy,
                               total.value()[0], weights.mean()});
      rec.d_loss += d_loss;
      rec.d0_loss += adv.value()[0];
      rec.entropy_loss += entropy;
      for (std::size_t i = 0; i < bs; ++i) {
        const int label = source.labels[idx_s[i]];
        epoch_weights.push_back(weights.values[i]);
        epoch_labels.push_back(label);
        if (monitor.keep_weight_records) {
          m.weight_records.push_back({epoch, idx_s[i], raw[i], weights.values[i], label,
                                      monitor.shared_classes.contains(label)});
        }
      }
    }

    const double nb = static_cast<double>(batches);
    rec.d_loss /= nb;
    rec.d0_loss /= nb;
    rec.entropy_loss /= nb;
    const double n = static_cast<double>(epoch_weights.size());
    rec.weight_mean = std::accumulate(epoch_weights.begin(), epoch_weights.end(), 0.0) / n;
    double sq = 0.0;
    for (double w : epoch_weights) sq += (w - rec.weight_mean) * (w - rec.weight_mean);
    rec.weight_std = std::sqrt(sq / n);
    if (!monitor.shared_classes.empty()) {
      const auto stats = weight_statistics(epoch_weights, epoch_labels, monitor.shared_classes);
      rec.mean_shared_weight = stats.mean_shared;
      rec.mean_outlier_weight = stats.mean_outlier;
    }
    if (monitor.target_eval) {
      rec.target_accuracy =
          evaluate(m.target_extractor, m.classifier, *monitor.target_eval).accuracy;
    }
    m.history.push_back(rec);
  }
  return m;
}

EvalResult evaluate(const Mlp& extractor, const Mlp& classifier, const LabeledDataset& eval) {
  const std::size_t k = classifier.spec().output_width();
  if (eval.size() == 0) throw DataError("evaluate: empty evaluation set");
  if (eval.labels.size() != eval.size()) throw DataError("evaluate: label count mismatch");
  for (int y : eval.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw DataError("evaluate: label " + std::to_string(y) + " outside the source label space [0, " +
                      std::to_string(k) + ")");
    }
  }
  const Array2 probs = classifier.predict(extractor.predict(eval.features));
  EvalResult r;
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto row = probs.row_span(i);
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const auto truth = static_cast<std::size_t>(eval.labels[i]);
    ++r.confusion[truth][pred];
    if (pred == truth) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(eval.size());
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t total = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    r.per_class_accuracy.push_back(
        total == 0 ? std::nullopt
                   : std::optional(static_cast<double>(r.confusion[c][c]) / static_cast<double>(total)));
  }
  return r;
}

EvalResult evaluate(const TrainedModel& model, const LabeledDataset& eval) {
  return evaluate(model.target_extractor, model.classifier, eval);
}

ImportanceWeights source_weights(const TrainedModel& model, const LabeledDataset& source) {
  const Array2 zs = model.source_extractor.predict(source.features);
  return normalize(raw_weights(clamped_outputs(model.weight_discriminator.predict(zs))));
}

RunOutcome run_adaptation(const LabeledDataset& source, const UnlabeledDataset& target,
                          const TrainConfig& config, const KeyValues& task_echo,
                          const PretrainedModel* pretrained, bool keep_weight_records) {
  const auto started = std::chrono::steady_clock::now();
  std::optional<PretrainedModel> own;
  if (pretrained == nullptr) {
    own = pretrain_source(source, config);
    pretrained = &*own;
  }
  AdaptMonitor monitor;
  monitor.keep_weight_records = keep_weight_records;
  monitor.target_eval = evaluation_view(target, source.class_count);
  if (target.hidden_labels) {
    monitor.shared_classes.insert(target.hidden_labels->begin(), target.hidden_labels->end());
  }
  RunOutcome out{adapt(*pretrained, source, target, config, monitor), make_run_report(config, task_echo)};
  for (const auto& e : out.model.pretrain_history) record_pretrain_epoch(out.report, e);
  for (const auto& e : out.model.history) record_epoch(out.report, e);
  if (monitor.target_eval) {
    const auto weights = config.weighted ? source_weights(out.model, source)
                                         : ImportanceWeights::ones(source.size());
    finalize(out.report, evaluate(out.model, *monitor.target_eval), weights.values, source.labels,
             monitor.shared_classes);
  }
  out.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace iwan
