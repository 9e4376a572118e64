// Copyright 2026 The conjstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace conjstack {

// All library failures derive from `error`. The CLI maps config_error and
// parse_error to exit status 2 and the numeric families to exit status 3.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A profile or argument lies outside the domain of an operation.
class domain_error : public error {
 public:
  using error::error;
};

/// Invalid experiment, game, or conjecture configuration.
class config_error : public error {
 public:
  using error::error;
};

/// Malformed document (JSON or CSV); the message carries the offending path.
class parse_error : public error {
 public:
  using error::error;
};

/// Malformed or empty input to an analysis routine.
class input_error : public error {
 public:
  using error::error;
};

class numeric_error : public error {
 public:
  using error::error;
};

/// Best-response solver did not converge.
class solver_error : public numeric_error {
 public:
  solver_error(const std::string& what, double residual)
      : numeric_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Non-finite loss while fitting a conjecture.
class training_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

/// Non-finite or runaway iterate during strategy dynamics.
class divergence_error : public numeric_error {
 public:
  divergence_error(const std::string& what, std::size_t iteration)
      : numeric_error(what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace conjstack
