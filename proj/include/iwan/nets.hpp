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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iwan/autodiff.hpp"
#include "iwan/weighting.hpp"

namespace iwan {

enum class OutputHead { linear, sigmoid, softmax };

std::string to_string(OutputHead head);
OutputHead output_head_from_string(const std::string& s);

// Fully connected network shape: input width, hidden widths..., output width.
// Hidden layers use ReLU.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  OutputHead output_head = OutputHead::linear;

  void validate() const;
  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  bool operator==(const MlpSpec&) const = default;
};

class Mlp {
 public:
  Mlp() = default;
  // Zero-valued parameters; use init_mlp for a trainable start.
  Mlp(std::string name, MlpSpec spec);

  const std::string& name() const { return name_; }
  const MlpSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return weights_.size(); }

  // Parameters bound as tape leaves; gradients reach them if trainable.
  Var forward(Tape& tape, const Var& x);
  // Parameters bound as constants; gradient still flows through to x.
  Var forward_frozen(Tape& tape, const Var& x) const;
  // Untaped evaluation.
  Array2 predict(const Array2& x) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void set_trainable(bool trainable);

  // FNV-1a over the bit patterns of every parameter value.
  std::uint64_t checksum() const;

  Parameter& weight(std::size_t layer) { return weights_.at(layer); }
  Parameter& bias(std::size_t layer) { return biases_.at(layer); }
  const Parameter& weight(std::size_t layer) const { return weights_.at(layer); }
  const Parameter& bias(std::size_t layer) const { return biases_.at(layer); }

 private:
  template <typename Bind>
  Var run(Tape& tape, const Var& x, Bind bind) const;

  std::string name_;
  MlpSpec spec_;
  std::vector<Parameter> weights_;  // fan_in x fan_out
  std::vector<Parameter> biases_;   // 1 x fan_out
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Mlp init_mlp(std::string name, const MlpSpec& spec, std::mt19937_64& rng);

// Copies src's parameter values into dst bitwise. ContractError if the specs differ.
void clone_parameters(const Mlp& src, Mlp& dst);

// Mean over the batch of -log C(z)[y], probabilities clamped.
Var source_classification_loss(Tape& tape, Mlp& classifier, const Var& features,
                               std::span<const int> labels);

// Binary cross-entropy with source labelled 1 and target labelled 0:
// -(mean log D(z_s) + mean log(1 - D(z_t))).
Var domain_adversarial_loss(Tape& tape, Mlp& discriminator, const Var& source_features,
                            const Var& target_features);

// -(mean_i w_i log D0(z_s,i) + mean_j log(1 - D0(grl(z_t,j)))).
// Weights enter as constants. The target path passes through a gradient
// reversal layer with the given coefficient, so one backward pass descends
// the loss for D0 and ascends it (scaled) for whatever produced z_t.
Var weighted_domain_adversarial_loss(Tape& tape, Mlp& discriminator, const Var& source_features,
                                     const ImportanceWeights& weights,
                                     const Var& target_features, double reversal_coefficient);

// Mean Shannon entropy of the frozen classifier's predictions. The
// classifier's parameters are bound as constants and receive no gradient.
Var target_entropy_loss(Tape& tape, const Mlp& classifier, const Var& target_features);

}  // namespace iwan
