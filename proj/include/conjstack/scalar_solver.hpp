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

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "conjstack/action_box.hpp"
#include "conjstack/errors.hpp"

namespace conjstack {

enum class Sense { minimize, maximize };

/// +1 for minimizers, -1 for maximizers: multiplying an objective (or its
/// gradient) by this turns it into descent form.
constexpr double descent_sign(Sense s) noexcept { return s == Sense::maximize ? -1.0 : 1.0; }

struct ScalarSolverOptions {
  // Cells of the derivative scan used to bracket interior minima.
  std::size_t grid_cells = 256;
  std::size_t max_iterations = 200;
  // Projected-stationarity target |proj(x - h'(x)) - x|.
  double tolerance = 1e-10;
};

namespace detail {

// Safeguarded Newton on h' inside a bracket with h'(a) < 0 < h'(b). The
// second derivative comes from a central difference of h'.
template <class Deriv>
double bracketed_stationary_point(const Deriv& dh, double a, double b,
                                  const ScalarSolverOptions& opts) {
  double x = 0.5 * (a + b);
  double d = dh(x);
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    if (std::abs(d) <= opts.tolerance) return x;
    if (d < 0) {
      a = x;
    } else {
      b = x;
    }
    const double scale = std::max(1.0, std::abs(x));
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * scale) return x;

    const double step = 1e-6 * scale;
    const double curvature = (dh(x + step) - dh(x - step)) / (2.0 * step);
    double next = 0.5 * (a + b);
    if (curvature > 0 && std::isfinite(curvature)) {
      const double newton = x - d / curvature;
      if (newton > a && newton < b) next = newton;
    }
    x = next;
    d = dh(x);
  }
  throw solver_error("scalar box solver exceeded iteration cap", std::abs(d));
}

}  // namespace detail

/// Global minimizer (or maximizer) of a smooth scalar function over a box.
///
/// Brackets every descent-to-ascent sign change of the derivative on a
/// uniform scan, polishes each bracket with safeguarded Newton, and compares
/// the resulting interior candidates with both endpoints. Exact ties go to
/// the smaller abscissa, so the lower endpoint wins an endpoint tie.
template <class Value, class Deriv>
double solve_scalar_box(const Value& value, const Deriv& derivative, const ActionBox& box,
                        Sense sense, const ScalarSolverOptions& opts = {}) {
  const double s = descent_sign(sense);
  auto h = [&](double x) { return s * value(x); };
  auto dh = [&](double x) { return s * derivative(x); };

  const std::size_t n = std::max<std::size_t>(opts.grid_cells, 1);
  const double lo = box.lower();
  const double hi = box.upper();
  const double cell = (hi - lo) / static_cast<double>(n);

  std::vector<double> candidates{lo};
  double x_prev = lo;
  double d_prev = dh(lo);
  for (std::size_t k = 1; k <= n; ++k) {
    const double x_k = (k == n) ? hi : lo + cell * static_cast<double>(k);
    const double d_k = dh(x_k);
    if (d_prev < 0 && d_k > 0) {
      candidates.push_back(detail::bracketed_stationary_point(dh, x_prev, x_k, opts));
    } else if (d_k == 0 && k < n && d_prev < 0) {
      candidates.push_back(x_k);
    }
    x_prev = x_k;
    d_prev = d_k;
  }
  candidates.push_back(hi);

  double best = candidates.front();
  double best_h = h(best);
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double hk = h(candidates[k]);
    if (hk < best_h) {
      best = candidates[k];
      best_h = hk;
    }
  }
  return best;
}

/// Projected-stationarity residual |proj(x - h'(x)) - x| in descent form.
template <class Deriv>
double projected_residual(const Deriv& derivative, const ActionBox& box, Sense sense, double x) {
  const double g = descent_sign(sense) * derivative(x);
  return std::abs(box.project(x - g) - x);
}

}  // namespace conjstack
