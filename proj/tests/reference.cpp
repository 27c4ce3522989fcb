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

#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iwan::testing {

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

Array2 reference_forward(const Mlp& net, const Array2& x) {
  Array2 h = x;
  const std::size_t layers = net.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const Array2& w = net.weight(l).value;
    const Array2& b = net.bias(l).value;
    Array2 next(h.rows(), w.cols(), 0.0);
    for (std::size_t i = 0; i < h.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double acc = b(0, j);
        for (std::size_t k = 0; k < w.rows(); ++k) acc += h(i, k) * w(k, j);
        next(i, j) = (l + 1 < layers) ? std::max(acc, 0.0) : acc;
      }
    }
    h = std::move(next);
  }
  switch (net.spec().output_head) {
    case OutputHead::linear:
      break;
    case OutputHead::sigmoid:
      for (std::size_t i = 0; i < h.size(); ++i) h[i] = 1.0 / (1.0 + std::exp(-h[i]));
      break;
    case OutputHead::softmax:
      for (std::size_t i = 0; i < h.rows(); ++i) {
        double top = h(i, 0);
        for (std::size_t j = 1; j < h.cols(); ++j) top = std::max(top, h(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < h.cols(); ++j) z += std::exp(h(i, j) - top);
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = std::exp(h(i, j) - top) / z;
      }
      break;
  }
  return h;
}

double reference_cross_entropy(const Array2& probs, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(clamp_probability(probs(i, static_cast<std::size_t>(labels[i]))));
  }
  return total / static_cast<double>(labels.size());
}

double reference_domain_loss(const Array2& ds, const Array2& dt) {
  const std::vector<double> ones(ds.rows(), 1.0);
  return reference_weighted_domain_loss(ds, ones, dt);
}

double reference_weighted_domain_loss(const Array2& ds, std::span<const double> weights,
                                      const Array2& dt) {
  double src = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) src += weights[i] * std::log(clamp_probability(ds[i]));
  double tgt = 0.0;
  for (std::size_t j = 0; j < dt.rows(); ++j) tgt += std::log(clamp_probability(1.0 - dt[j]));
  return -(src / static_cast<double>(ds.rows()) + tgt / static_cast<double>(dt.rows()));
}

double reference_entropy(const Array2& probs) {
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t k = 0; k < probs.cols(); ++k) {
      const double p = clamp_probability(probs(i, k));
      total -= p * std::log(p);
    }
  }
  return total / static_cast<double>(probs.rows());
}

GradientCheck check_gradients(std::span<Parameter* const> params,
                              const std::function<double()>& objective, double step,
                              double rel_tol, double abs_floor) {
  GradientCheck out;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + step;
      const double up = objective();
      p->value[i] = saved - step;
      const double down = objective();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad[i];
      const double diff = std::abs(analytic - numeric);
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      const double rel = scale > 0.0 ? diff / scale : 0.0;
      ++out.entries;
      out.worst_abs_difference = std::max(out.worst_abs_difference, diff);
      if (diff < abs_floor) continue;
      if (rel >= rel_tol) ++out.failures;
      if (rel > out.worst_relative_error) {
        out.worst_relative_error = rel;
        out.worst_entry = p->name + "[" + std::to_string(i) + "] analytic " +
                          std::to_string(analytic) + " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

std::vector<Parameter*> LossGraph::parameters() {
  std::vector<Parameter*> out;
  for (Mlp* net : {&fs, &ft, &c, &d, &d0}) {
    for (Parameter* p : net->parameters()) out.push_back(p);
  }
  return out;
}

Var LossGraph::build(Tape& tape) {
  Var total;
  auto accumulate_term = [&](double k, const Var& term) {
    if (k == 0.0) return;
    Var scaled = scale(term, k);
    total = total.valid() ? add(total, scaled) : scaled;
  };
  Var vs = tape.constant(xs);
  Var vt = tape.constant(xt);
  if (coeff[0] != 0.0) {
    accumulate_term(coeff[0], source_classification_loss(tape, c, fs.forward(tape, vs), ys));
  }
  if (coeff[1] != 0.0) {
    accumulate_term(coeff[1],
                    domain_adversarial_loss(tape, d, fs.forward(tape, vs), ft.forward(tape, vt)));
  }
  if (coeff[2] != 0.0) {
    accumulate_term(coeff[2], weighted_domain_adversarial_loss(tape, d0, fs.forward(tape, vs),
                                                               weights, ft.forward(tape, vt),
                                                               lambda));
  }
  if (coeff[3] != 0.0) {
    accumulate_term(coeff[3], target_entropy_loss(tape, c, ft.forward(tape, vt)));
  }
  return total;
}

std::function<double()> LossGraph::reference_objective() const {
  const Array2 zt0 = reference_forward(ft, xt);
  const Mlp c_snapshot = c;
  return [this, zt0, c_snapshot]() {
    double total = 0.0;
    const Array2 zs = reference_forward(fs, xs);
    const Array2 zt = reference_forward(ft, xt);
    if (coeff[0] != 0.0) total += coeff[0] * reference_cross_entropy(reference_forward(c, zs), ys);
    if (coeff[1] != 0.0) {
      total += coeff[1] * reference_domain_loss(reference_forward(d, zs), reference_forward(d, zt));
    }
    if (coeff[2] != 0.0) {
      Array2 reversed = zt0;
      for (std::size_t i = 0; i < reversed.size(); ++i) reversed[i] -= lambda * (zt[i] - zt0[i]);
      total += coeff[2] * reference_weighted_domain_loss(reference_forward(d0, zs), weights.values,
                                                         reference_forward(d0, reversed));
    }
    if (coeff[3] != 0.0) total += coeff[3] * reference_entropy(reference_forward(c_snapshot, zt));
    return total;
  };
}

LossGraph make_random_graph(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  std::uniform_int_distribution<std::size_t> batch(3, 7);
  std::uniform_int_distribution<int> depth(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t in = width(rng);
  MlpSpec extractor{{in}, OutputHead::linear};
  for (int l = depth(rng); l >= 0; --l) extractor.layer_widths.push_back(width(rng));
  const std::size_t feat = extractor.output_width();
  const int classes = static_cast<int>(width(rng));
  MlpSpec classifier{{feat, static_cast<std::size_t>(classes)}, OutputHead::softmax};
  MlpSpec disc{{feat}, OutputHead::sigmoid};
  for (int l = depth(rng); l > 0; --l) disc.layer_widths.push_back(width(rng));
  disc.layer_widths.push_back(1);

  LossGraph g;
  g.fs = init_mlp("fs", extractor, rng);
  g.ft = init_mlp("ft", extractor, rng);
  g.c = init_mlp("c", classifier, rng);
  g.d = init_mlp("d", disc, rng);
  g.d0 = init_mlp("d0", disc, rng);
  // Non-zero biases so the bias gradients are exercised away from the init point.
  for (Mlp* net : {&g.fs, &g.ft, &g.c, &g.d, &g.d0}) {
    for (std::size_t l = 0; l < net->layer_count(); ++l) {
      for (double& b : net->bias(l).value.values()) b = 0.1 * normal(rng);
    }
  }

  const std::size_t ns = batch(rng), nt = batch(rng);
  g.xs = Array2(ns, in);
  g.xt = Array2(nt, in);
  for (double& v : g.xs.values()) v = normal(rng);
  for (double& v : g.xt.values()) v = normal(rng) + 0.5;
  std::uniform_int_distribution<int> label(0, classes - 1);
  for (std::size_t i = 0; i < ns; ++i) g.ys.push_back(label(rng));
  std::vector<double> raw(ns);
  for (double& r : raw) r = 0.05 + unit(rng);
  g.weights = normalize(raw);
  g.lambda = unit(rng);

  // Term subsets by seed: each loss alone, then pairs, then everything.
  static constexpr std::array<std::array<bool, 4>, 10> kSubsets{{{1, 0, 0, 0},
                                                                 {0, 1, 0, 0},
                                                                 {0, 0, 1, 0},
                                                                 {0, 0, 0, 1},
                                                                 {1, 0, 0, 1},
                                                                 {0, 1, 1, 0},
                                                                 {1, 1, 0, 0},
                                                                 {0, 0, 1, 1},
                                                                 {1, 0, 1, 1},
                                                                 {1, 1, 1, 1}}};
  const auto& subset = kSubsets[seed % kSubsets.size()];
  for (std::size_t k = 0; k < 4; ++k) g.coeff[k] = subset[k] ? 0.25 + unit(rng) : 0.0;
  return g;
}

GradientCheck check_graph(LossGraph& graph) {
  const auto params = graph.parameters();
  zero_grads(params);
  const auto objective = graph.reference_objective();
  {
    Tape tape;
    tape.backward(graph.build(tape));
  }
  return check_gradients(params, objective);
}

}  // namespace iwan::testing
