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

#include "iwan/nets.hpp"

#include <bit>
#include <cmath>

#include "iwan/error.hpp"

namespace iwan {

std::string to_string(OutputHead head) {
  switch (head) {
    case OutputHead::linear: return "linear";
    case OutputHead::sigmoid: return "sigmoid";
    case OutputHead::softmax: return "softmax";
  }
  return "linear";
}

OutputHead output_head_from_string(const std::string& s) {
  if (s == "linear") return OutputHead::linear;
  if (s == "sigmoid") return OutputHead::sigmoid;
  if (s == "softmax") return OutputHead::softmax;
  throw DataError("unknown output head '" + s + "'");
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) throw ContractError("MlpSpec: need at least 2 layer widths");
  for (std::size_t w : layer_widths) {
    if (w < 1) throw ContractError("MlpSpec: layer widths must be >= 1");
  }
  if (output_head == OutputHead::sigmoid && output_width() != 1) {
    throw ContractError("MlpSpec: sigmoid head requires output width 1");
  }
}

Mlp::Mlp(std::string name, MlpSpec spec) : name_(std::move(name)), spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t l = 0; l + 1 < spec_.layer_widths.size(); ++l) {
    const std::size_t in = spec_.layer_widths[l];
    const std::size_t out = spec_.layer_widths[l + 1];
    weights_.emplace_back(name_ + ".W" + std::to_string(l), Array2(in, out));
    biases_.emplace_back(name_ + ".b" + std::to_string(l), Array2(1, out));
  }
}

template <typename Bind>
Var Mlp::run(Tape& tape, const Var& x, Bind bind) const {
  if (x.value().cols() != spec_.input_width()) {
    throw DimensionError(name_ + ": input has " + std::to_string(x.value().cols()) +
                         " columns, network expects " + std::to_string(spec_.input_width()));
  }
  Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = add_row_bias(matmul(h, bind(tape, l, true)), bind(tape, l, false));
    if (l + 1 < weights_.size()) h = relu(h);
  }
  switch (spec_.output_head) {
    case OutputHead::linear: return h;
    case OutputHead::sigmoid: return sigmoid(h);
    case OutputHead::softmax: return softmax_rows(h);
  }
  return h;
}

Var Mlp::forward(Tape& tape, const Var& x) {
  return run(tape, x, [this](Tape& t, std::size_t l, bool is_weight) {
    return t.parameter(is_weight ? weights_[l] : biases_[l]);
  });
}

Var Mlp::forward_frozen(Tape& tape, const Var& x) const {
  return run(tape, x, [this](Tape& t, std::size_t l, bool is_weight) {
    return t.frozen(is_weight ? weights_[l] : biases_[l]);
  });
}

Array2 Mlp::predict(const Array2& x) const {
  Tape tape;
  return forward_frozen(tape, tape.constant(x)).value();
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

void Mlp::set_trainable(bool trainable) {
  for (auto* p : parameters()) p->trainable = trainable;
}

std::uint64_t Mlp::checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto* p : parameters()) {
    for (double v : p->value.values()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

Mlp init_mlp(std::string name, const MlpSpec& spec, std::mt19937_64& rng) {
  Mlp net(std::move(name), spec);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Parameter& w = net.weight(l);
    const double limit =
        std::sqrt(6.0 / static_cast<double>(w.value.rows() + w.value.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w.value.values()) v = dist(rng);
  }
  return net;
}

void clone_parameters(const Mlp& src, Mlp& dst) {
  if (!(src.spec() == dst.spec())) {
    throw ContractError("clone_parameters: " + src.name() + " and " + dst.name() +
                        " have different specs");
  }
  auto from = src.parameters();
  auto to = dst.parameters();
  for (std::size_t i = 0; i < from.size(); ++i) {
    to[i]->value = from[i]->value;
    to[i]->zero_grad();
    to[i]->velocity.fill(0.0);
  }
}

namespace {

Var clamped_log(const Var& p) { return log(clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor)); }

// log(1 - p) with p clamped first.
Var clamped_log_complement(Tape& tape, const Var& p) {
  Var pc = clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
  Var ones = tape.constant(Array2(pc.value().rows(), pc.value().cols(), 1.0));
  return log(sub(ones, pc));
}

void require_rows(const Var& v, const char* what) {
  if (v.value().rows() == 0) throw ContractError(std::string(what) + ": empty batch");
}

}  // namespace

Var source_classification_loss(Tape& tape, Mlp& classifier, const Var& features,
                               std::span<const int> labels) {
  require_rows(features, "source_classification_loss");
  if (features.value().rows() != labels.size()) {
    throw DimensionError("source_classification_loss: " +
                         std::to_string(features.value().rows()) + " feature rows for " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t k = classifier.spec().output_width();
  Array2 onehot(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw DataError("source_classification_loss: label " + std::to_string(labels[i]) +
                      " outside [0, " + std::to_string(k) + ")");
    }
    onehot(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  Var probs = classifier.forward(tape, features);
  Var picked = sum(mul(tape.constant(std::move(onehot)), clamped_log(probs)));
  return scale(picked, -1.0 / static_cast<double>(labels.size()));
}

Var domain_adversarial_loss(Tape& tape, Mlp& discriminator, const Var& source_features,
                            const Var& target_features) {
  require_rows(source_features, "domain_adversarial_loss");
  require_rows(target_features, "domain_adversarial_loss");
  Var ds = discriminator.forward(tape, source_features);
  Var dt = discriminator.forward(tape, target_features);
  return neg(add(mean(clamped_log(ds)), mean(clamped_log_complement(tape, dt))));
}

Var weighted_domain_adversarial_loss(Tape& tape, Mlp& discriminator, const Var& source_features,
                                     const ImportanceWeights& weights,
                                     const Var& target_features, double reversal_coefficient) {
  require_rows(source_features, "weighted_domain_adversarial_loss");
  require_rows(target_features, "weighted_domain_adversarial_loss");
  const std::size_t ns = source_features.value().rows();
  if (weights.size() != ns) {
    throw DimensionError("weighted_domain_adversarial_loss: " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(ns) + " source rows");
  }
  for (double w : weights.values) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ContractError("weighted_domain_adversarial_loss: weights must be finite and >= 0");
    }
  }
  Var ds = discriminator.forward(tape, source_features);
  Var dt = discriminator.forward(tape, grl(target_features, reversal_coefficient));
  Var w = tape.constant(Array2::column(weights.values));
  Var source_term = scale(sum(mul(w, clamped_log(ds))), 1.0 / static_cast<double>(ns));
  return neg(add(source_term, mean(clamped_log_complement(tape, dt))));
}

Var target_entropy_loss(Tape& tape, const Mlp& classifier, const Var& target_features) {
  require_rows(target_features, "target_entropy_loss");
  Var p = classifier.forward_frozen(tape, target_features);
  Var plogp = sum(mul(p, clamped_log(p)));
  return scale(plogp, -1.0 / static_cast<double>(target_features.value().rows()));
}

}  // namespace iwan
