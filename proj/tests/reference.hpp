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

// Independent plain-loop implementations used as test oracles. Nothing in
// here touches the tape; values are recomputed from parameter storage.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "iwan/array2.hpp"
#include "iwan/autodiff.hpp"
#include "iwan/nets.hpp"
#include "iwan/weighting.hpp"

namespace iwan::testing {

double clamp_probability(double p);

// Forward pass of `net` with explicit loops over its current parameter values.
Array2 reference_forward(const Mlp& net, const Array2& x);

double reference_cross_entropy(const Array2& probs, std::span<const int> labels);
// -(mean log ds + mean log(1 - dt)) over single-column outputs.
double reference_domain_loss(const Array2& ds, const Array2& dt);
double reference_weighted_domain_loss(const Array2& ds, std::span<const double> weights,
                                      const Array2& dt);
double reference_entropy(const Array2& probs);

struct GradientCheck {
  std::size_t entries = 0;
  std::size_t failures = 0;
  double worst_relative_error = 0.0;  // among entries above the absolute floor
  double worst_abs_difference = 0.0;
  std::string worst_entry;
  bool ok() const { return entries > 0 && failures == 0; }
};

// Compares every entry of each parameter's accumulated grad against central
// differences of `objective`. An entry passes if the absolute difference is
// below abs_floor or the relative difference is below rel_tol.
GradientCheck check_gradients(std::span<Parameter* const> params,
                              const std::function<double()>& objective, double step = 1e-5,
                              double rel_tol = 1e-5, double abs_floor = 1e-8);

// One of the five-network loss graphs used for end-to-end gradient checks.
// The total is sum_k coeff[k] * L_k over
//   0: source cross-entropy    C(F_s(x_s)) vs y_s
//   1: domain loss             D on F_s(x_s), F_t(x_t)
//   2: weighted domain loss    D0 on F_s(x_s) with weights, grl(F_t(x_t), lambda)
//   3: target entropy          frozen C on F_t(x_t)
// with zero coefficients meaning the term is left out of the graph.
struct LossGraph {
  Mlp fs, ft, c, d, d0;
  Array2 xs, xt;
  std::vector<int> ys;
  ImportanceWeights weights;
  double lambda = 0.0;
  std::array<double, 4> coeff{};

  std::vector<Parameter*> parameters();
  Var build(Tape& tape);
  // Value-only objective whose central differences equal the taped
  // gradients: the reversal layer becomes z0 - lambda (F_t(x_t) - z0) and
  // the entropy term reads a snapshot of C, both taken when this is called.
  std::function<double()> reference_objective() const;
};

// Random shapes, data, weights and coefficients. Cycles through term
// subsets so that every loss appears across consecutive seeds.
LossGraph make_random_graph(std::uint64_t seed);

// Runs backward on the graph's tape and checks every parameter entry.
GradientCheck check_graph(LossGraph& graph);

}  // namespace iwan::testing
