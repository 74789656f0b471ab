/*
 * Copyright 2026 the adamkl authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adamkl {

// Base type for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of inputs do not line up (vector lengths, matrix sizes, index maps).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input is structurally valid but numerically unusable, e.g. all samples
// identical when a distance scale is required, or a class with too few
// members to sample from.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A binary subproblem was handed fewer than two distinct labels.
class DegenerateClassError : public Error {
 public:
  using Error::Error;
};

// Misuse of an operation: off-simplex weights, unknown sample identifier,
// empty candidate pool, untrained model, and similar caller mistakes.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Combined kernel failed the positive semidefinite probe even after the
// one-shot diagonal jitter.
class KernelError : public Error {
 public:
  using Error::Error;
};

// Text input could not be parsed. byte_offset locates the first offending
// byte within the parsed buffer.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t byte_offset)
      : Error(message + " (byte " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}

  std::size_t byte_offset;
};

// Configuration rejected; key names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : Error("config key '" + key + "': " + message), key(key) {}

  std::string key;
};

// Metric is undefined for the given inputs (e.g. chance agreement equals 1)
// or aggregation inputs are inconsistent.
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace adamkl
