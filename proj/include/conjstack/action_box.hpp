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

#include <algorithm>
#include <cmath>
#include <string>

#include "conjstack/errors.hpp"

namespace conjstack {

/// Closed interval [lower, upper] of admissible scalar actions. An unbounded
/// side is represented by a finite cap chosen by the game.
class ActionBox {
 public:
  ActionBox(double lower, double upper) : lower_(lower), upper_(upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
      throw config_error("action box requires finite lower < upper, got [" +
                         std::to_string(lower) + ", " + std::to_string(upper) + "]");
    }
  }

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  double width() const noexcept { return upper_ - lower_; }
  double midpoint() const noexcept { return 0.5 * (lower_ + upper_); }

  double project(double x) const noexcept { return std::clamp(x, lower_, upper_); }
  bool contains(double x) const noexcept { return x >= lower_ && x <= upper_; }
  bool on_boundary(double x) const noexcept { return x <= lower_ || x >= upper_; }

  friend bool operator==(const ActionBox&, const ActionBox&) = default;

 private:
  double lower_;
  double upper_;
};

}  // namespace conjstack
