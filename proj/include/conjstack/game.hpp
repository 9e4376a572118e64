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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conjstack/action_box.hpp"
#include "conjstack/errors.hpp"
#include "conjstack/scalar_solver.hpp"

namespace conjstack {

/// Leader actions x_1..x_N plus the follower action y. Games without a
/// follower ignore `follower_action`.
struct StrategyProfile {
  std::vector<double> leader_actions;
  double follower_action = 0.0;

  friend bool operator==(const StrategyProfile&, const StrategyProfile&) = default;
};

/// Identifies a leader by zero-based index, or the follower.
class PlayerId {
 public:
  static PlayerId leader(std::size_t index) { return PlayerId(false, index); }
  static PlayerId follower() { return PlayerId(true, 0); }

  bool is_follower() const noexcept { return follower_; }
  std::size_t index() const noexcept { return index_; }

  /// "x_1".."x_N" or "y", matching the coordinate names used in files.
  std::string name() const {
    return follower_ ? std::string("y") : "x_" + std::to_string(index_ + 1);
  }

  friend bool operator==(const PlayerId&, const PlayerId&) = default;

 private:
  PlayerId(bool follower, std::size_t index) : follower_(follower), index_(index) {}
  bool follower_;
  std::size_t index_;
};

/// First partial derivatives of one player's objective. For a leader i:
/// `own` is d/dx_i, `others` holds d/dx_j for j != i in increasing j, and
/// `follower` is d/dy. For the follower only `own` (= d/dy) is populated.
struct Partials {
  double own = 0.0;
  std::vector<double> others;
  double follower = 0.0;
};

using LeaderValueFn = std::function<double(std::size_t, std::span<const double>, double)>;
using LeaderPartialsFn = std::function<Partials(std::size_t, std::span<const double>, double)>;
using LeaderResponseFn = std::function<double(std::size_t, std::span<const double>, double)>;
using FollowerValueFn = std::function<double(std::span<const double>, double)>;
using FollowerResponseFn = std::function<double(std::span<const double>)>;

struct FollowerDefinition {
  Sense sense = Sense::minimize;
  ActionBox box{0.0, 1.0};
  FollowerValueFn value;
  FollowerValueFn derivative;  // d g / d y
  // Optional closed-form best response (already projected onto `box`).
  FollowerResponseFn best_response;
};

/// Plain description of a game; GameSpec validates and freezes it.
struct GameDefinition {
  std::string name;
  std::vector<Sense> leader_sense;
  std::vector<ActionBox> leader_boxes;
  LeaderValueFn leader_value;
  LeaderPartialsFn leader_partials;
  // Optional closed-form leader best response (x_i given the full leader
  // vector, whose i-th entry is ignored, and y).
  LeaderResponseFn leader_best_response;
  std::optional<FollowerDefinition> follower;
  // Lipschitz constants of the leaders' objectives and of the follower's best
  // response; estimated by the analysis module when absent.
  std::optional<double> lipschitz_objective;
  std::optional<double> lipschitz_response;
};

/// Immutable multi-leader single-follower game with scalar actions.
class GameSpec {
 public:
  explicit GameSpec(GameDefinition def) : def_(std::move(def)) {
    const std::size_t n = def_.leader_boxes.size();
    if (n == 0) throw config_error("game '" + def_.name + "' needs at least one leader");
    if (def_.leader_sense.size() != n)
      throw config_error("game '" + def_.name + "': one objective sense per leader required");
    if (!def_.leader_value || !def_.leader_partials)
      throw config_error("game '" + def_.name + "': leader objective and partials required");
    if (def_.follower && (!def_.follower->value || !def_.follower->derivative))
      throw config_error("game '" + def_.name + "': follower objective and derivative required");
  }

  const std::string& name() const noexcept { return def_.name; }
  std::size_t leader_count() const noexcept { return def_.leader_boxes.size(); }
  bool has_follower() const noexcept { return def_.follower.has_value(); }

  const ActionBox& leader_box(std::size_t i) const { return def_.leader_boxes.at(i); }
  Sense leader_sense(std::size_t i) const { return def_.leader_sense.at(i); }
  const ActionBox& follower_box() const { return follower_def().box; }
  Sense follower_sense() const { return follower_def().sense; }

  const ActionBox& box(PlayerId p) const {
    return p.is_follower() ? follower_box() : leader_box(p.index());
  }
  Sense sense(PlayerId p) const {
    return p.is_follower() ? follower_sense() : leader_sense(p.index());
  }

  std::optional<double> lipschitz_objective() const { return def_.lipschitz_objective; }
  std::optional<double> lipschitz_response() const { return def_.lipschitz_response; }

  // Unchecked evaluations. Conjectured profiles may leave the boxes, so the
  // dynamics call these directly; the checked entry points are the free
  // functions below.
  double leader_value(std::size_t i, std::span<const double> x, double y) const {
    return def_.leader_value(i, x, y);
  }
  Partials leader_partials(std::size_t i, std::span<const double> x, double y) const {
    return def_.leader_partials(i, x, y);
  }
  double follower_value(std::span<const double> x, double y) const {
    return follower_def().value(x, y);
  }
  double follower_derivative(std::span<const double> x, double y) const {
    return follower_def().derivative(x, y);
  }

  bool has_follower_closed_form() const { return has_follower() && bool(def_.follower->best_response); }
  bool has_leader_closed_form() const { return bool(def_.leader_best_response); }
  double follower_closed_form(std::span<const double> x) const { return def_.follower->best_response(x); }
  double leader_closed_form(std::size_t i, std::span<const double> x, double y) const {
    return def_.leader_best_response(i, x, y);
  }

  /// Throws domain_error naming the first coordinate outside its box.
  void check_profile(const StrategyProfile& p) const {
    if (p.leader_actions.size() != leader_count()) {
      throw domain_error("profile has " + std::to_string(p.leader_actions.size()) +
                         " leader actions, game '" + name() + "' has " +
                         std::to_string(leader_count()));
    }
    for (std::size_t i = 0; i < leader_count(); ++i) {
      check_coordinate(PlayerId::leader(i), p.leader_actions[i]);
    }
    if (has_follower()) check_coordinate(PlayerId::follower(), p.follower_action);
  }

  void check_player(PlayerId p) const {
    if (p.is_follower() ? !has_follower() : p.index() >= leader_count()) {
      throw domain_error("game '" + name() + "' has no player " + p.name());
    }
  }

  void check_coordinate(PlayerId p, double v) const {
    const ActionBox& b = box(p);
    if (!std::isfinite(v) || !b.contains(v)) {
      throw domain_error("coordinate " + p.name() + " = " + std::to_string(v) +
                         " outside [" + std::to_string(b.lower()) + ", " +
                         std::to_string(b.upper()) + "]");
    }
  }

 private:
  const FollowerDefinition& follower_def() const {
    if (!def_.follower) throw domain_error("game '" + def_.name + "' has no follower");
    return *def_.follower;
  }

  GameDefinition def_;
};

/// Raw objective value of `player` at `profile` (sense is metadata).
inline double evaluate(const GameSpec& game, const StrategyProfile& profile, PlayerId player) {
  game.check_player(player);
  game.check_profile(profile);
  if (player.is_follower()) return game.follower_value(profile.leader_actions, profile.follower_action);
  return game.leader_value(player.index(), profile.leader_actions, profile.follower_action);
}

/// Analytic first partials of `player`'s objective at `profile`.
inline Partials partials(const GameSpec& game, const StrategyProfile& profile, PlayerId player) {
  game.check_player(player);
  game.check_profile(profile);
  if (player.is_follower()) {
    Partials p;
    p.own = game.follower_derivative(profile.leader_actions, profile.follower_action);
    return p;
  }
  return game.leader_partials(player.index(), profile.leader_actions, profile.follower_action);
}

/// Follower's optimal action on its box for fixed leader actions; closed
/// form when the game provides one, numeric otherwise.
inline double follower_best_response(const GameSpec& game, std::span<const double> leader_actions,
                                     const ScalarSolverOptions& opts = {}) {
  if (!game.has_follower()) throw domain_error("game '" + game.name() + "' has no follower");
  if (game.has_follower_closed_form()) return game.follower_closed_form(leader_actions);
  std::vector<double> x(leader_actions.begin(), leader_actions.end());
  auto value = [&](double y) { return game.follower_value(x, y); };
  auto deriv = [&](double y) { return game.follower_derivative(x, y); };
  return solve_scalar_box(value, deriv, game.follower_box(), game.follower_sense(), opts);
}

/// Numeric route for leader i's best response, bypassing any closed form.
inline double leader_best_response_numeric(const GameSpec& game, std::size_t i,
                                           std::span<const double> leader_actions, double y,
                                           const ScalarSolverOptions& opts = {}) {
  std::vector<double> x(leader_actions.begin(), leader_actions.end());
  auto value = [&](double xi) {
    x[i] = xi;
    return game.leader_value(i, x, y);
  };
  auto deriv = [&](double xi) {
    x[i] = xi;
    return game.leader_partials(i, x, y).own;
  };
  return solve_scalar_box(value, deriv, game.leader_box(i), game.leader_sense(i), opts);
}

/// Numeric route for the follower, bypassing any closed form.
inline double follower_best_response_numeric(const GameSpec& game, std::span<const double> leader_actions,
                                             const ScalarSolverOptions& opts = {}) {
  auto value = [&](double y) { return game.follower_value(leader_actions, y); };
  auto deriv = [&](double y) { return game.follower_derivative(leader_actions, y); };
  return solve_scalar_box(value, deriv, game.follower_box(), game.follower_sense(), opts);
}

/// Leader i's optimal action given the other leaders (`others`, increasing
/// index, i excluded) and the follower action y.
inline double leader_best_response(const GameSpec& game, std::size_t i, std::span<const double> others,
                                   double y, const ScalarSolverOptions& opts = {}) {
  game.check_player(PlayerId::leader(i));
  if (others.size() + 1 != game.leader_count()) {
    throw domain_error("leader_best_response expects " + std::to_string(game.leader_count() - 1) +
                       " peer actions");
  }
  std::vector<double> x;
  x.reserve(game.leader_count());
  for (std::size_t j = 0, k = 0; j < game.leader_count(); ++j) {
    x.push_back(j == i ? game.leader_box(i).lower() : others[k++]);
  }
  if (game.has_leader_closed_form()) return game.leader_closed_form(i, x, y);
  return leader_best_response_numeric(game, i, x, y, opts);
}

/// Full leader vector with entry i removed.
inline std::vector<double> peers_of(std::span<const double> x, std::size_t i) {
  std::vector<double> out;
  out.reserve(x.size() ? x.size() - 1 : 0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j != i) out.push_back(x[j]);
  }
  return out;
}

}  // namespace conjstack
