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
#include <numeric>
#include <vector>

#include "conjstack/game.hpp"

namespace conjstack {

/// Two leaders pulled toward a target y chosen by a follower that tracks
/// their mean:
///   f_i = -(x_i - y)^2 - K (1 - exp(-(x_j - y)^2)),  g = ((x_1 + x_2)/2 - y)^2.
/// Leaders maximize, the follower minimizes. Requires K < -1.
inline GameSpec leaders_dilemma(double K, ActionBox box = ActionBox(-2.0, 2.0)) {
  if (!(K < -1.0)) throw config_error("leaders_dilemma requires K < -1, got " + std::to_string(K));

  GameDefinition def;
  def.name = "leaders_dilemma";
  def.leader_sense = {Sense::maximize, Sense::maximize};
  def.leader_boxes = {box, box};
  def.leader_value = [K](std::size_t i, std::span<const double> x, double y) {
    const double own = x[i] - y;
    const double other = x[1 - i] - y;
    return -own * own + K * std::expm1(-other * other);
  };
  def.leader_partials = [K](std::size_t i, std::span<const double> x, double y) {
    const double own = x[i] - y;
    const double other = x[1 - i] - y;
    const double bump = std::exp(-other * other);
    Partials p;
    p.own = -2.0 * own;
    p.others = {-2.0 * K * other * bump};
    p.follower = 2.0 * own + 2.0 * K * other * bump;
    return p;
  };
  // x_i = y maximizes -(x_i - y)^2; the peer term does not involve x_i.
  def.leader_best_response = [box](std::size_t, std::span<const double>, double y) {
    return box.project(y);
  };

  FollowerDefinition follower;
  follower.sense = Sense::minimize;
  follower.box = box;
  follower.value = [](std::span<const double> x, double y) {
    const double gap = 0.5 * (x[0] + x[1]) - y;
    return gap * gap;
  };
  follower.derivative = [](std::span<const double> x, double y) {
    return -2.0 * (0.5 * (x[0] + x[1]) - y);
  };
  follower.best_response = [box](std::span<const double> x) { return box.project(0.5 * (x[0] + x[1])); };
  def.follower = follower;
  return GameSpec(std::move(def));
}

enum class OlsderMode { simultaneous, stackelberg };

struct OlsderOptions {
  // Finite stand-in for the unbounded upper end of [0, +inf).
  double cap = 400.0;
  OlsderMode mode = OlsderMode::simultaneous;
};

namespace olsder {

inline double f1(double x1, double x2) { return (x1 - 84.0) * (-12.5 * x1 + 21.0 * x2 + 756.0); }
inline double f2(double x1, double x2) { return (x2 - 50.0) * (25.0 * x1 - 50.0 * x2 + 560.0); }
inline double df1_dx1(double x1, double x2) { return -25.0 * x1 + 21.0 * x2 + 1806.0; }
inline double df1_dx2(double x1, double) { return 21.0 * (x1 - 84.0); }
inline double df2_dx1(double, double x2) { return 25.0 * (x2 - 50.0); }
inline double df2_dx2(double x1, double x2) { return 25.0 * x1 - 100.0 * x2 + 3060.0; }
// Unprojected stationarity lines of each player's objective.
inline double response1(double x2) { return 0.84 * x2 + 72.24; }
inline double response2(double x1) { return 0.25 * x1 + 30.6; }

}  // namespace olsder

/// Two-player quadratic game where both players maximize
///   f1 = (x1 - 84)(-12.5 x1 + 21 x2 + 756),  f2 = (x2 - 50)(25 x1 - 50 x2 + 560)
/// on [0, cap]. Simultaneous mode has two leaders and no follower;
/// Stackelberg mode has player 1 as the only leader and player 2 as the
/// follower (y = x2, g = f2).
inline GameSpec olsder_game(const OlsderOptions& opts = {}) {
  const ActionBox box(0.0, opts.cap);
  GameDefinition def;
  if (opts.mode == OlsderMode::simultaneous) {
    def.name = "olsder_simultaneous";
    def.leader_sense = {Sense::maximize, Sense::maximize};
    def.leader_boxes = {box, box};
    def.leader_value = [](std::size_t i, std::span<const double> x, double) {
      return i == 0 ? olsder::f1(x[0], x[1]) : olsder::f2(x[0], x[1]);
    };
    def.leader_partials = [](std::size_t i, std::span<const double> x, double) {
      Partials p;
      if (i == 0) {
        p.own = olsder::df1_dx1(x[0], x[1]);
        p.others = {olsder::df1_dx2(x[0], x[1])};
      } else {
        p.own = olsder::df2_dx2(x[0], x[1]);
        p.others = {olsder::df2_dx1(x[0], x[1])};
      }
      return p;
    };
    def.leader_best_response = [box](std::size_t i, std::span<const double> x, double) {
      return box.project(i == 0 ? olsder::response1(x[1]) : olsder::response2(x[0]));
    };
  } else {
    def.name = "olsder_stackelberg";
    def.leader_sense = {Sense::maximize};
    def.leader_boxes = {box};
    def.leader_value = [](std::size_t, std::span<const double> x, double y) { return olsder::f1(x[0], y); };
    def.leader_partials = [](std::size_t, std::span<const double> x, double y) {
      Partials p;
      p.own = olsder::df1_dx1(x[0], y);
      p.follower = olsder::df1_dx2(x[0], y);
      return p;
    };
    def.leader_best_response = [box](std::size_t, std::span<const double>, double y) {
      return box.project(olsder::response1(y));
    };
    FollowerDefinition follower;
    follower.sense = Sense::maximize;
    follower.box = box;
    follower.value = [](std::span<const double> x, double y) { return olsder::f2(x[0], y); };
    follower.derivative = [](std::span<const double> x, double y) { return olsder::df2_dx2(x[0], y); };
    follower.best_response = [box](std::span<const double> x) { return box.project(olsder::response2(x[0])); };
    def.follower = follower;
  }
  return GameSpec(std::move(def));
}

/// Leaders with linear objectives f_i = a_i x_i + sum_{j != i} b_ij x_j + c_i y
/// and a follower minimizing g = q/2 y^2 - (p . x + r) y, q > 0, whose best
/// response is proj((p . x + r) / q).
struct LinearQuadraticOptions {
  std::vector<double> a;
  std::vector<std::vector<double>> b;  // N x N, diagonal ignored
  std::vector<double> c;
  Sense leader_sense = Sense::minimize;
  ActionBox leader_box{-1.0, 1.0};
  double q = 1.0;
  std::vector<double> p;
  double r = 0.0;
  ActionBox follower_box{-10.0, 10.0};
};

inline GameSpec linear_quadratic(const LinearQuadraticOptions& o) {
  const std::size_t n = o.a.size();
  if (n == 0) throw config_error("linear_quadratic needs at least one leader");
  if (o.c.size() != n || o.p.size() != n || o.b.size() != n)
    throw config_error("linear_quadratic coefficient vectors must all have one entry per leader");
  for (const auto& row : o.b) {
    if (row.size() != n) throw config_error("linear_quadratic b must be an N x N matrix");
  }
  if (!(o.q > 0)) throw config_error("linear_quadratic follower curvature q must be positive");

  GameDefinition def;
  def.name = "linear_quadratic";
  def.leader_sense.assign(n, o.leader_sense);
  def.leader_boxes.assign(n, o.leader_box);
  def.leader_value = [o](std::size_t i, std::span<const double> x, double y) {
    double v = o.a[i] * x[i] + o.c[i] * y;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) v += o.b[i][j] * x[j];
    }
    return v;
  };
  def.leader_partials = [o](std::size_t i, std::span<const double> x, double) {
    Partials p;
    p.own = o.a[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) p.others.push_back(o.b[i][j]);
    }
    p.follower = o.c[i];
    return p;
  };

  auto drive = [o](std::span<const double> x) {
    return std::inner_product(o.p.begin(), o.p.end(), x.begin(), o.r);
  };
  FollowerDefinition follower;
  follower.sense = Sense::minimize;
  follower.box = o.follower_box;
  follower.value = [o, drive](std::span<const double> x, double y) { return 0.5 * o.q * y * y - drive(x) * y; };
  follower.derivative = [o, drive](std::span<const double> x, double y) { return o.q * y - drive(x); };
  follower.best_response = [o, drive](std::span<const double> x) {
    return o.follower_box.project(drive(x) / o.q);
  };
  def.follower = follower;
  return GameSpec(std::move(def));
}

}  // namespace conjstack
