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

#include "iwan/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "iwan/error.hpp"

namespace iwan {

Parameter::Parameter(std::string n, Array2 v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(Array2::zeros_like(value)),
      velocity(Array2::zeros_like(value)) {}

const Array2& Var::value() const { return tape_->nodes_.at(id_).value; }

Array2 Var::grad() const {
  const auto& node = tape_->nodes_.at(id_);
  return node.grad.empty() ? Array2::zeros_like(node.value) : node.grad;
}

bool Var::requires_grad() const { return tape_->nodes_.at(id_).requires_grad; }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owner(const Var& v) const {
  if (v.tape_ != this) throw ContractError("Var belongs to a different tape");
}

Var Tape::constant(Array2 value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Array2 value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = p.trainable;
  n.parameter = &p;
  return push(std::move(n));
}

Var Tape::record(Array2 value, std::span<const Var> operands, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& op : operands) {
    check_owner(op);
    n.requires_grad = n.requires_grad || nodes_[op.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

void Tape::accumulate(const Var& target, const Array2& gradient) {
  check_owner(target);
  Node& n = nodes_[target.id_];
  if (!n.requires_grad) return;
  if (!gradient.same_shape(n.value)) {
    throw DimensionError("gradient shape " + gradient.shape_string() + " does not match value " +
                         n.value.shape_string());
  }
  if (n.grad.empty()) {
    n.grad = gradient;
  } else {
    n.grad.add_in_place(gradient);
  }
}

void Tape::backward(const Var& loss) {
  check_owner(loss);
  if (replayed_) throw ContractError("backward: tape has already been replayed");
  const Array2& lv = nodes_[loss.id_].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  replayed_ = true;
  last_visits_ = 0;
  if (!nodes_[loss.id_].requires_grad) return;
  nodes_[loss.id_].grad = Array2(1, 1, 1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    // Operands always precede their consumer, so accumulation never touches n.
    n.backward(*this, n.grad, n.value);
    ++last_visits_;
  }
  for (auto& n : nodes_) {
    if (n.parameter != nullptr && n.parameter->trainable && !n.grad.empty()) {
      if (n.parameter->grad.empty()) n.parameter->grad = Array2::zeros_like(n.parameter->value);
      n.parameter->grad.add_in_place(n.grad);
    }
  }
}

namespace {

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError(std::string(op) + ": shape " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
}

template <typename F>
Array2 map_values(const Array2& x, F f) {
  Array2 out = Array2::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Array2 out = matmul_values(a.value(), b.value());
  const Var ops[] = {a, b};
  return a.tape().record(std::move(out), ops, [a, b](Tape& t, const Array2& g, const Array2&) {
    if (a.requires_grad()) t.accumulate(a, matmul_a_bt(g, b.value()));
    if (b.requires_grad()) t.accumulate(b, matmul_at_b(a.value(), g));
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Array2 out = a.value();
  out.add_in_place(b.value());
  const Var ops[] = {a, b};
  return a.tape().record(std::move(out), ops, [a, b](Tape& t, const Array2& g, const Array2&) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Array2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const Var ops[] = {a, b};
  return a.tape().record(std::move(out), ops, [a, b](Tape& t, const Array2& g, const Array2&) {
    t.accumulate(a, g);
    if (b.requires_grad()) t.accumulate(b, map_values(g, [](double v) { return -v; }));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Array2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const Var ops[] = {a, b};
  return a.tape().record(std::move(out), ops, [a, b](Tape& t, const Array2& g, const Array2&) {
    if (a.requires_grad()) {
      Array2 ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
      t.accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Array2 gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
      t.accumulate(b, gb);
    }
  });
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var relu(const Var& x) {
  Array2 out = map_values(x.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x](Tape& t, const Array2& g, const Array2&) {
    Array2 gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(x.value()[i] > 0.0)) gx[i] = 0.0;
    t.accumulate(x, gx);
  });
}

Var sigmoid(const Var& x) {
  Array2 out = map_values(x.value(), stable_sigmoid);
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x](Tape& t, const Array2& g, const Array2& y) {
    Array2 gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = y[i];
      gx[i] *= s * (1.0 - s);
    }
    t.accumulate(x, gx);
  });
}

Var log(const Var& x) {
  for (double v : x.value().values()) {
    if (std::isnan(v)) throw NumericalError("log: NaN argument");
    if (!(v > 0.0)) {
      throw DomainError("log: non-positive argument " + std::to_string(v) +
                        " (clamp probabilities first)");
    }
  }
  Array2 out = map_values(x.value(), [](double v) { return std::log(v); });
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x](Tape& t, const Array2& g, const Array2&) {
    Array2 gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] /= x.value()[i];
    t.accumulate(x, gx);
  });
}

Var exp(const Var& x) {
  Array2 out = map_values(x.value(), [](double v) { return std::exp(v); });
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x](Tape& t, const Array2& g, const Array2& y) {
    Array2 gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y[i];
    t.accumulate(x, gx);
  });
}

Var elementwise(UnaryOp op, const Var& x) {
  switch (op) {
    case UnaryOp::relu: return relu(x);
    case UnaryOp::sigmoid: return sigmoid(x);
    case UnaryOp::log: return log(x);
    case UnaryOp::exp: return exp(x);
    case UnaryOp::neg: return neg(x);
  }
  throw ContractError("elementwise: unknown unary op");
}

Var elementwise(BinaryOp op, const Var& a, const Var& b) {
  switch (op) {
    case BinaryOp::add: return add(a, b);
    case BinaryOp::sub: return sub(a, b);
    case BinaryOp::mul: return mul(a, b);
  }
  throw ContractError("elementwise: unknown binary op");
}

Var add_row_bias(const Var& x, const Var& bias) {
  const Array2& xv = x.value();
  const Array2& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw DimensionError("add_row_bias: bias " + bv.shape_string() + " does not fit rows of " +
                         xv.shape_string());
  }
  Array2 out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const Var ops[] = {x, bias};
  return x.tape().record(std::move(out), ops, [x, bias](Tape& t, const Array2& g, const Array2&) {
    t.accumulate(x, g);
    if (bias.requires_grad()) {
      Array2 gb(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      t.accumulate(bias, gb);
    }
  });
}

Var grl(const Var& x, double coefficient) {
  if (!(coefficient >= 0.0) || !std::isfinite(coefficient)) {
    throw ConfigError("grl: coefficient must be a finite value >= 0, got " +
                      std::to_string(coefficient));
  }
  const Var ops[] = {x};
  return x.tape().record(x.value(), ops, [x, coefficient](Tape& t, const Array2& g, const Array2&) {
    t.accumulate(x, map_values(g, [coefficient](double v) { return -coefficient * v; }));
  });
}

Var clamp(const Var& x, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
  Array2 out = map_values(x.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); });
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x, lo, hi](Tape& t, const Array2& g, const Array2&) {
    Array2 gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = x.value()[i];
      if (v < lo || v > hi) gx[i] = 0.0;
    }
    t.accumulate(x, gx);
  });
}

Var scale(const Var& x, double factor) {
  Array2 out = map_values(x.value(), [factor](double v) { return factor * v; });
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x, factor](Tape& t, const Array2& g, const Array2&) {
    t.accumulate(x, map_values(g, [factor](double v) { return factor * v; }));
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const Var ops[] = {x};
  return x.tape().record(Array2(1, 1, acc), ops, [x](Tape& t, const Array2& g, const Array2&) {
    t.accumulate(x, Array2(x.value().rows(), x.value().cols(), g[0]));
  });
}

Var mean(const Var& x) {
  if (x.value().empty()) throw ContractError("mean: empty array");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var softmax_rows(const Var& x) {
  const Array2& xv = x.value();
  Array2 out = Array2::zeros_like(xv);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto row = xv.row_span(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      out(r, c) = std::exp(xv(r, c) - mx);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) /= z;
  }
  const Var ops[] = {x};
  return x.tape().record(std::move(out), ops, [x](Tape& t, const Array2& g, const Array2& p) {
    Array2 gx = Array2::zeros_like(p);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < p.cols(); ++c) dot += g(r, c) * p(r, c);
      for (std::size_t c = 0; c < p.cols(); ++c) gx(r, c) = p(r, c) * (g(r, c) - dot);
    }
    t.accumulate(x, gx);
  });
}

Var detach(const Var& x) { return x.tape().constant(x.value()); }

void sgd_step(std::span<Parameter* const> params, double learning_rate, double momentum) {
  if (!(learning_rate > 0.0)) throw ConfigError("sgd_step: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("sgd_step: momentum must be in [0,1)");
  for (Parameter* p : params) {
    if (p->trainable && !p->grad.all_finite()) {
      throw NumericalError("sgd_step: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  for (Parameter* p : params) {
    if (p->trainable) {
      if (p->velocity.empty()) p->velocity = Array2::zeros_like(p->value);
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->velocity[i] = momentum * p->velocity[i] + p->grad[i];
        p->value[i] -= learning_rate * p->velocity[i];
      }
    }
    p->zero_grad();
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace iwan
