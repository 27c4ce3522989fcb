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

#include "iwan/array2.hpp"

#include <algorithm>
#include <cmath>

#include "iwan/error.hpp"

namespace iwan {

Array2::Array2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Array2::Array2(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("Array2: " + std::to_string(values_.size()) +
                         " values do not fill a " + std::to_string(rows_) + "x" +
                         std::to_string(cols_) + " array");
  }
}

Array2::Array2(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Array2: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Array2 Array2::column(std::span<const double> values) {
  return Array2(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Array2 Array2::row(std::span<const double> values) {
  return Array2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool Array2::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Array2::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Array2::add_in_place(const Array2& other) {
  if (!same_shape(other)) {
    throw DimensionError("add_in_place: shape " + shape_string() + " vs " + other.shape_string());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

Array2 Array2::transposed() const {
  Array2 out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

std::string Array2::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Array2 matmul_values(const Array2& a, const Array2& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
  }
  Array2 out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* orow = &out(i, 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.values()[k * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Array2 matmul_at_b(const Array2& a, const Array2& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_at_b: " + a.shape_string() + " vs " + b.shape_string());
  }
  Array2 out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = &b.values()[k * n];
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* orow = &out(i, 0);
      for (std::size_t j = 0; j < n; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Array2 matmul_a_bt(const Array2& a, const Array2& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_a_bt: " + a.shape_string() + " vs " + b.shape_string());
  }
  Array2 out(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = &a.values()[i * inner];
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = &b.values()[j * inner];
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Array2 gather_rows(const Array2& a, std::span<const std::size_t> indices) {
  Array2 out(indices.size(), a.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    const auto src = a.row_span(indices[r]);
    std::copy(src.begin(), src.end(), &out(r, 0));
  }
  return out;
}

}  // namespace iwan
