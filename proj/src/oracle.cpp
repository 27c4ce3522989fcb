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

#include "iwan/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "iwan/error.hpp"

namespace iwan::oracle {

AnalyticDensity::AnalyticDensity(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ContractError("AnalyticDensity: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.stddev > 0.0)) throw ContractError("AnalyticDensity: stddev must be > 0");
    if (!(c.weight > 0.0)) throw ContractError("AnalyticDensity: mixture weights must be > 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ContractError("AnalyticDensity: mixture weights must sum to 1");
  }
}

double AnalyticDensity::operator()(double z) const {
  double p = 0.0;
  for (const auto& c : components_) {
    const double u = (z - c.mean) / c.stddev;
    p += c.weight * std::exp(-0.5 * u * u) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

double AnalyticDensity::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double pick = u(rng);
  const GaussianComponent* chosen = &components_.back();
  for (const auto& c : components_) {
    if (pick < c.weight) {
      chosen = &c;
      break;
    }
    pick -= c.weight;
  }
  std::normal_distribution<double> n(chosen->mean, chosen->stddev);
  return n(rng);
}

void QuadratureGrid::validate() const {
  if (!(upper > lower)) throw ContractError("QuadratureGrid: upper must exceed lower");
  if (nodes < 3) throw ContractError("QuadratureGrid: need at least 3 nodes");
  if (rule == QuadratureRule::simpson && nodes % 2 == 0) {
    throw ContractError("QuadratureGrid: simpson rule needs an odd node count");
  }
}

std::vector<double> QuadratureGrid::points() const {
  validate();
  std::vector<double> out(nodes);
  const double h = spacing();
  for (std::size_t i = 0; i < nodes; ++i) out[i] = lower + h * static_cast<double>(i);
  out.back() = upper;
  return out;
}

std::vector<double> QuadratureGrid::weights() const {
  validate();
  const double h = spacing();
  std::vector<double> w(nodes, h);
  if (rule == QuadratureRule::trapezoid) {
    w.front() = w.back() = h / 2.0;
  } else {
    for (std::size_t i = 0; i < nodes; ++i) {
      const double c = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      w[i] = c * h / 3.0;
    }
  }
  return w;
}

double QuadratureGrid::integrate(std::span<const double> values) const {
  if (values.size() != nodes) throw DimensionError("integrate: value count does not match grid");
  const auto w = weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) acc += w[i] * values[i];
  return acc;
}

QuadratureGrid QuadratureGrid::covering(const AnalyticDensity& a, const AnalyticDensity& b,
                                        std::size_t nodes, QuadratureRule rule) {
  double lo = INFINITY, hi = -INFINITY, sd = 0.0;
  for (const auto* d : {&a, &b}) {
    for (const auto& c : d->components()) {
      lo = std::min(lo, c.mean);
      hi = std::max(hi, c.mean);
      sd = std::max(sd, c.stddev);
    }
  }
  QuadratureGrid g{lo - 8.0 * sd, hi + 8.0 * sd, nodes, rule};
  g.validate();
  return g;
}

double optimal_d(const AnalyticDensity& ps, const AnalyticDensity& pt, double z) {
  const double s = ps(z);
  return s / (s + pt(z));
}

AnalyticWeight::AnalyticWeight(AnalyticDensity ps, AnalyticDensity pt, const QuadratureGrid& grid)
    : ps_(std::move(ps)), pt_(std::move(pt)) {
  const auto z = grid.points();
  std::vector<double> mass(z.size()), weighted(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    mass[i] = ps_(z[i]);
    weighted[i] = raw(z[i]) * mass[i];
  }
  const double captured = grid.integrate(mass);
  if (captured < 0.999) {
    throw TruncationError("analytic weight: grid holds only " + std::to_string(captured) +
                          " of the source mass");
  }
  normalizer_ = grid.integrate(weighted);
}

double AnalyticWeight::raw(double z) const {
  const double t = pt_(z);
  return t / (ps_(z) + t);
}

double optimal_d0(const AnalyticDensity& ps, const AnalyticDensity& pt, const WeightFunction& w,
                  double z) {
  const double ws = w(z) * ps(z);
  const double denom = ws + pt(z);
  return denom > 0.0 ? ws / denom : 0.0;
}

namespace {

// q log(q / r) with 0 log 0 = 0.
double xlogy_ratio(double q, double r) { return q > 0.0 ? q * std::log(q / r) : 0.0; }

void check_unit_mass(std::span<const double> q, const QuadratureGrid& grid, const char* which) {
  const double mass = grid.integrate(q);
  if (std::abs(mass - 1.0) > 1e-4) {
    throw NormalizationError(std::string("js_divergence: ") + which + " integrates to " +
                             std::to_string(mass) + ", not 1");
  }
}

}  // namespace

double js_divergence(std::span<const double> q1, std::span<const double> q2,
                     const QuadratureGrid& grid) {
  if (q1.size() != grid.nodes || q2.size() != grid.nodes) {
    throw DimensionError("js_divergence: density values do not match the grid");
  }
  check_unit_mass(q1, grid, "first density");
  check_unit_mass(q2, grid, "second density");
  std::vector<double> integrand(grid.nodes);
  for (std::size_t i = 0; i < grid.nodes; ++i) {
    const double m = 0.5 * (q1[i] + q2[i]);
    integrand[i] = 0.5 * xlogy_ratio(q1[i], m) + 0.5 * xlogy_ratio(q2[i], m);
  }
  return std::clamp(grid.integrate(integrand), 0.0, std::numbers::ln2);
}

JsIdentity verify_js_identity(const AnalyticDensity& ps, const AnalyticDensity& pt,
                              const WeightFunction& w, const QuadratureGrid& grid) {
  const auto z = grid.points();
  std::vector<double> q1(z.size()), q2(z.size()), objective(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    q1[i] = w(z[i]) * ps(z[i]);
    q2[i] = pt(z[i]);
    const double d0 = optimal_d0(ps, pt, w, z[i]);
    // q1 log D0* + q2 log(1 - D0*), written through the ratios to keep 0 log 0 = 0.
    const double total = q1[i] + q2[i];
    objective[i] = (q1[i] > 0.0 ? q1[i] * std::log(d0) : 0.0) +
                   (q2[i] > 0.0 ? q2[i] * std::log(q2[i] / total) : 0.0);
  }
  JsIdentity r;
  r.objective_at_optimum = grid.integrate(objective);
  r.js = js_divergence(q1, q2, grid);
  r.minus_log4_plus_2js = -std::log(4.0) + 2.0 * r.js;
  r.residual = std::abs(r.objective_at_optimum - r.minus_log4_plus_2js);
  return r;
}

double compare_trained_discriminator(const Mlp& discriminator, const FeatureMap& feature_map,
                                     const AnalyticDensity& ps, const AnalyticDensity& pt,
                                     const QuadratureGrid& grid) {
  const auto z = grid.points();
  const Array2 d = discriminator.predict(feature_map(Array2::column(z)));
  std::vector<double> deviation(z.size()), mass(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    mass[i] = 0.5 * (ps(z[i]) + pt(z[i]));
    deviation[i] = std::abs(d[i] - optimal_d(ps, pt, z[i])) * mass[i];
  }
  return grid.integrate(deviation) / grid.integrate(mass);
}

Mlp fit_discriminator(const AnalyticDensity& ps, const AnalyticDensity& pt,
                      const DiscriminatorFit& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<double> xs(options.samples_per_density), xt(options.samples_per_density);
  for (double& v : xs) v = ps.sample(rng);
  for (double& v : xt) v = pt.sample(rng);

  MlpSpec spec;
  spec.layer_widths.push_back(1);
  spec.layer_widths.insert(spec.layer_widths.end(), options.hidden.begin(), options.hidden.end());
  spec.layer_widths.push_back(1);
  spec.output_head = OutputHead::sigmoid;
  Mlp d = init_mlp("density_discriminator", spec, rng);
  const auto params = d.parameters();

  std::uniform_int_distribution<std::size_t> pick(0, options.samples_per_density - 1);
  Array2 bs(options.batch_size, 1), bt(options.batch_size, 1);
  for (std::size_t step = 0; step < options.steps; ++step) {
    for (std::size_t i = 0; i < options.batch_size; ++i) {
      bs[i] = xs[pick(rng)];
      bt[i] = xt[pick(rng)];
    }
    Tape tape;
    Var loss = domain_adversarial_loss(tape, d, tape.constant(bs), tape.constant(bt));
    tape.backward(loss);
    sgd_step(params, options.learning_rate, options.momentum);
  }
  return d;
}

std::vector<OracleCheck> run_oracle_checks(const OracleCheckOptions& options) {
  const auto ps = AnalyticDensity::normal(0.0, 1.0);
  const auto pt = AnalyticDensity::normal(2.0, 1.0);
  const AnalyticDensity mixture({{0.0, 1.0, 0.5}, {6.0, 1.0, 0.5}});
  const auto grid = QuadratureGrid::covering(ps, pt, options.grid_nodes);
  const auto mix_grid = QuadratureGrid::covering(mixture, ps, options.grid_nodes);
  const double tol = options.tolerance;

  std::vector<OracleCheck> out;
  auto add = [&out](std::string name, double computed, double reference, double tolerance) {
    const double residual = std::abs(computed - reference);
    out.push_back({std::move(name), computed, reference, residual, tolerance, residual < tolerance});
  };

  add("optimal_d midpoint", optimal_d(ps, pt, 1.0), 0.5, tol);
  add("optimal_d at z=0", optimal_d(ps, pt, 0.0), 1.0 / (1.0 + std::exp(-2.0)), tol);

  const AnalyticWeight w_shift(ps, pt, grid);
  const AnalyticWeight w_mix(mixture, ps, mix_grid);
  for (const auto& [name, w, src, g] :
       {std::tuple{"unit mass of w*p_s (shifted pair)", &w_shift, &ps, &grid},
        std::tuple{"unit mass of w*p_s (outlier mixture)", &w_mix, &mixture, &mix_grid}}) {
    const auto z = g->points();
    std::vector<double> q(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) q[i] = (*w)(z[i]) * (*src)(z[i]);
    add(name, g->integrate(q), 1.0, tol);
  }

  double max_gap = 0.0;
  for (double z : grid.points()) {
    max_gap = std::max(max_gap, std::abs(optimal_d0(ps, pt, unit_weight, z) - optimal_d(ps, pt, z)));
  }
  add("optimal_d0 with unit weights = optimal_d", max_gap, 0.0, 1e-15);

  const auto unit = verify_js_identity(ps, pt, unit_weight, grid);
  add("JS identity, unit weights", unit.objective_at_optimum, unit.minus_log4_plus_2js, tol);

  const auto weighted = verify_js_identity(mixture, ps, std::cref(w_mix), mix_grid);
  add("JS identity, analytic weights on outlier mixture", weighted.objective_at_optimum,
      weighted.minus_log4_plus_2js, tol);

  const auto at_optimum = verify_js_identity(ps, ps, unit_weight, grid);
  add("objective at w*p_s = p_t equals -ln 4", at_optimum.objective_at_optimum, -std::log(4.0),
      1e-9);

  const auto unweighted_mix = verify_js_identity(mixture, ps, unit_weight, mix_grid);
  out.push_back({"JS(w*p_s||p_t) < JS(p_s||p_t) on outlier mixture", weighted.js,
                 unweighted_mix.js, unweighted_mix.js - weighted.js, 0.0,
                 weighted.js < unweighted_mix.js});

  if (options.include_trained_discriminator) {
    const Mlp d = fit_discriminator(ps, pt);
    add("trained discriminator vs optimal_d (mass-weighted MAD)",
        compare_trained_discriminator(d, identity_features, ps, pt, grid), 0.0, 0.05);
  }
  return out;
}

std::string format_oracle_table(std::span<const OracleCheck> checks) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-55s %18s %18s %12s %6s\n", "check", "computed", "reference",
                "residual", "status");
  out += buf;
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%-55s %18.12g %18.12g %12.3e %6s\n", c.name.c_str(), c.computed,
                  c.reference, c.residual, c.pass ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

}  // namespace iwan::oracle
