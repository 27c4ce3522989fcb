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

#include <stdexcept>
#include <string>

namespace iwan {

// Base of every error raised by the library. The CLI maps NumericalError
// (and its subclasses) to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Argument outside the mathematical domain of an operation (e.g. log(x<=0)).
class DomainError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite value; the run cannot continue.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The weighting discriminator separated every source sample, so all raw
// importance weights are zero and normalization is undefined.
class DegenerateWeightsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Densities handed to a divergence routine do not integrate to one.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

// Quadrature grid too narrow to hold the density mass.
class TruncationError : public Error {
 public:
  using Error::Error;
};

}  // namespace iwan
