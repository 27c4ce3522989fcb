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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace iwan {

// Dense row-major matrix of doubles. Every value in the library (inputs,
// features, activations, parameters, gradients) lives in one of these.
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Array2(std::size_t rows, std::size_t cols, std::vector<double> values);
  Array2(std::initializer_list<std::initializer_list<double>> rows);

  static Array2 zeros_like(const Array2& other) { return Array2(other.rows_, other.cols_); }
  static Array2 column(std::span<const double> values);
  static Array2 row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  bool same_shape(const Array2& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double v);

  // this += other (shapes must agree).
  void add_in_place(const Array2& other);

  Array2 transposed() const;
  std::string shape_string() const;

  bool operator==(const Array2& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Plain matrix product without taping; throws DimensionError on mismatch.
Array2 matmul_values(const Array2& a, const Array2& b);

// a^T * b and a * b^T, the two products needed by matmul's backward pass.
Array2 matmul_at_b(const Array2& a, const Array2& b);
Array2 matmul_a_bt(const Array2& a, const Array2& b);

// Select rows by index (used for minibatching).
Array2 gather_rows(const Array2& a, std::span<const std::size_t> indices);

}  // namespace iwan
