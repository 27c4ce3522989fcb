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

// Closed-form checks of the adversarial weighting theory on 1-D Gaussian
// mixtures. Every integral is a quadrature over an explicit grid.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iwan/array2.hpp"
#include "iwan/nets.hpp"

namespace iwan::oracle {

struct GaussianComponent {
  double mean = 0.0;
  double stddev = 1.0;
  double weight = 1.0;
};

class AnalyticDensity {
 public:
  // ContractError unless stddevs > 0 and mixture weights are positive and sum to 1 (1e-12).
  explicit AnalyticDensity(std::vector<GaussianComponent> components);
  static AnalyticDensity normal(double mean, double stddev) {
    return AnalyticDensity({{mean, stddev, 1.0}});
  }

  double operator()(double z) const;
  double sample(std::mt19937_64& rng) const;
  const std::vector<GaussianComponent>& components() const { return components_; }

 private:
  std::vector<GaussianComponent> components_;
};

enum class QuadratureRule { trapezoid, simpson };

struct QuadratureGrid {
  double lower = -10.0;
  double upper = 10.0;
  std::size_t nodes = 4001;
  QuadratureRule rule = QuadratureRule::simpson;

  void validate() const;
  double spacing() const { return (upper - lower) / static_cast<double>(nodes - 1); }
  std::vector<double> points() const;
  std::vector<double> weights() const;
  double integrate(std::span<const double> values) const;

  // [min mean - 8 max sd, max mean + 8 max sd] over both densities.
  static QuadratureGrid covering(const AnalyticDensity& a, const AnalyticDensity& b,
                                 std::size_t nodes = 4001,
                                 QuadratureRule rule = QuadratureRule::simpson);
};

// p_s / (p_s + p_t).
double optimal_d(const AnalyticDensity& ps, const AnalyticDensity& pt, double z);

// Raw weight 1 - optimal_d = p_t / (p_s + p_t), normalized so that
// integral(w p_s) = 1 on the grid. TruncationError if the grid holds less
// than 0.999 of p_s's mass.
class AnalyticWeight {
 public:
  AnalyticWeight(AnalyticDensity ps, AnalyticDensity pt, const QuadratureGrid& grid);

  double raw(double z) const;
  double operator()(double z) const { return raw(z) / normalizer_; }
  double normalizer() const { return normalizer_; }

 private:
  AnalyticDensity ps_;
  AnalyticDensity pt_;
  double normalizer_ = 1.0;
};

using WeightFunction = std::function<double(double)>;

inline double unit_weight(double) { return 1.0; }

// w p_s / (w p_s + p_t).
double optimal_d0(const AnalyticDensity& ps, const AnalyticDensity& pt, const WeightFunction& w,
                  double z);

// Jensen-Shannon divergence of two densities sampled on the grid's nodes.
// NormalizationError unless both integrate to 1 within 1e-4.
double js_divergence(std::span<const double> q1, std::span<const double> q2,
                     const QuadratureGrid& grid);

struct JsIdentity {
  double objective_at_optimum = 0.0;  // weighted minimax value at the optimal D0
  double minus_log4_plus_2js = 0.0;
  double js = 0.0;
  double residual = 0.0;
};

// Evaluates the weighted objective at the optimal second discriminator by
// quadrature and, independently, -ln 4 + 2 JS(w p_s || p_t).
JsIdentity verify_js_identity(const AnalyticDensity& ps, const AnalyticDensity& pt,
                              const WeightFunction& w, const QuadratureGrid& grid);

using FeatureMap = std::function<Array2(const Array2&)>;
inline Array2 identity_features(const Array2& z) { return z; }

// Mass-weighted mean |d(z) - optimal_d(z)| with mass (p_s + p_t) / 2.
double compare_trained_discriminator(const Mlp& discriminator, const FeatureMap& feature_map,
                                     const AnalyticDensity& ps, const AnalyticDensity& pt,
                                     const QuadratureGrid& grid);

struct DiscriminatorFit {
  std::size_t samples_per_density = 4000;
  std::size_t steps = 2000;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::vector<std::size_t> hidden = {32, 32};
  std::uint64_t seed = 7;
};

// Trains a 1-D input sigmoid discriminator on samples of p_s (label 1)
// against samples of p_t (label 0) with the domain adversarial loss.
Mlp fit_discriminator(const AnalyticDensity& ps, const AnalyticDensity& pt,
                      const DiscriminatorFit& options = {});

struct OracleCheck {
  std::string name;
  double computed = 0.0;
  double reference = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleCheckOptions {
  std::size_t grid_nodes = 4001;
  double tolerance = 1e-6;
  bool include_trained_discriminator = true;
};

std::vector<OracleCheck> run_oracle_checks(const OracleCheckOptions& options = {});
std::string format_oracle_table(std::span<const OracleCheck> checks);

}  // namespace iwan::oracle
