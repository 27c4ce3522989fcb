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

// Minimal reverse-mode automatic differentiation over Array2 values.
//
// A Tape records every operation of one forward pass. Each recorded node
// keeps its value, an accumulated gradient and a closure that pushes its
// gradient to its operands. Tape::backward() seeds the scalar loss with 1
// and replays the nodes in reverse recording order, so every node is
// visited once and shared subexpressions receive the sum of all
// contributions. Parameters are bound to the tape as leaves; after the
// replay their leaf gradients are added into Parameter::grad.
//
// Usage:
//   Tape tape;
//   Var x = tape.constant(inputs);
//   Var h = relu(add_row_bias(matmul(x, tape.parameter(w)), tape.parameter(b)));
//   tape.backward(mean(h));
//   sgd_step(params, 0.1, 0.9);

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "iwan/array2.hpp"

namespace iwan {

// Probabilities are clamped to [kProbabilityFloor, 1 - kProbabilityFloor]
// before any logarithm so saturated heads keep losses finite.
inline constexpr double kProbabilityFloor = 1e-7;

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Array2 value);

  std::string name;
  Array2 value;
  Array2 grad;      // same shape as value
  Array2 velocity;  // momentum buffer, same shape as value
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the Tape lives.
class Var {
 public:
  Var() = default;

  const Array2& value() const;
  // Accumulated gradient after Tape::backward (zeros if none reached it).
  Array2 grad() const;
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn =
      std::function<void(Tape&, const Array2& upstream, const Array2& output)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives gradient.
  Var constant(Array2 value);
  // Leaf that receives gradient (readable through Var::grad()).
  Var variable(Array2 value);
  // Leaf bound to a parameter. Gradient flows to it only if p.trainable.
  Var parameter(Parameter& p);
  // Leaf holding a copy of p's value; p is never touched by backward().
  Var frozen(const Parameter& p) { return constant(p.value); }

  // Records an operation. `backward` is called with the node's accumulated
  // gradient and its own output value, and must accumulate into the
  // operands via accumulate().
  // When no operand requires grad the closure is dropped.
  Var record(Array2 value, std::span<const Var> operands, BackwardFn backward);

  void accumulate(const Var& target, const Array2& gradient);

  // Replays the tape from a 1x1 loss. May be called once per tape.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }
  // Number of recorded operations whose backward closure ran in the last replay.
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  friend class Var;

  struct Node {
    Array2 value;
    Array2 grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* parameter = nullptr;
  };

  Var push(Node node);
  void check_owner(const Var& v) const;

  std::vector<Node> nodes_;
  bool replayed_ = false;
  std::size_t last_visits_ = 0;
};

// Matrix product; DimensionError names both shapes on mismatch.
Var matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& x);
Var relu(const Var& x);
Var sigmoid(const Var& x);
// DomainError if any entry is <= 0; clamp first.
Var log(const Var& x);
Var exp(const Var& x);

enum class UnaryOp { relu, sigmoid, log, exp, neg };
enum class BinaryOp { add, sub, mul };
Var elementwise(UnaryOp op, const Var& x);
Var elementwise(BinaryOp op, const Var& a, const Var& b);

// x (n x m) + b (1 x m) broadcast over rows. The only broadcasting op.
Var add_row_bias(const Var& x, const Var& bias);

// Gradient reversal: identity forward, -coefficient * upstream backward.
// ConfigError if coefficient < 0.
Var grl(const Var& x, double coefficient);

// Elementwise clamp; gradient passes only where lo <= x <= hi.
Var clamp(const Var& x, double lo, double hi);
Var scale(const Var& x, double factor);
Var sum(const Var& x);
Var mean(const Var& x);
Var softmax_rows(const Var& x);
// Constant copy of x's value; cuts the gradient path.
Var detach(const Var& x);

// v <- momentum * v + grad; value <- value - lr * v; grad <- 0.
// Frozen (non-trainable) parameters are left unchanged. NumericalError
// naming the parameter if any gradient entry is non-finite.
void sgd_step(std::span<Parameter* const> params, double learning_rate, double momentum);
void zero_grads(std::span<Parameter* const> params);

}  // namespace iwan
