/*
 * Copyright 2026 The attrcam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace attrcam {

/// Root of every error raised by the library. `kind()` is the short,
/// machine-readable category printed by the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid configuration: bad hyper-parameters, non-exact output sizes,
/// unresolvable attribute/mask mappings.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// Tensor shapes that do not fit together.
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
  const char* kind() const noexcept override { return "dimension"; }
};

/// API misuse: seeding a foreign node, reusing a released trace, violating
/// a documented precondition such as a negative activation map.
class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

/// Malformed or inconsistent input data (labels, files, priors).
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};

/// An attribute whose positive-class prior is exactly 0 or 1.
class DegenerateAttributeError : public DataError {
 public:
  DegenerateAttributeError(std::string attribute, double prior);
  const std::string& attribute() const noexcept { return attribute_; }
  const char* kind() const noexcept override { return "degenerate-attribute"; }

 private:
  std::string attribute_;
};

/// Filesystem problems while reading or writing artifacts.
class IoError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "io"; }
};

/// Non-finite values or a diverging optimisation.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

}  // namespace attrcam
