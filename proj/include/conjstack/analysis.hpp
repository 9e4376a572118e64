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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conjstack/builtin_games.hpp"
#include "conjstack/conjecture_set.hpp"
#include "conjstack/dynamics.hpp"
#include "conjstack/errors.hpp"
#include "conjstack/game.hpp"
#include "conjstack/io.hpp"

namespace conjstack {

struct AnalysisTolerances {
  double stationarity = 1e-3;
  double follower = 1e-6;
  double consistency = 1e-3;
  // Relative slack for the comparison flags.
  double beats = 0.01;
  double below = 0.02;
};

struct LeaderResidual {
  double gradient = 0.0;            // descent-form conjectured gradient
  double projected_residual = 0.0;  // |proj(x - g) - x|
  double second_derivative = 0.0;   // of the descent-form conjectured objective
  bool on_boundary = false;
  bool second_order_ok = false;
};

struct ConsistencyGap {
  std::size_t owner = 0;
  PlayerId target = PlayerId::follower();
  double conjecture_slope = 0.0;
  double response_slope = 0.0;
  double gap = 0.0;
};

struct ReferenceDistance {
  std::string name;
  double distance = 0.0;  // Euclidean, over all players' actions
  std::vector<double> objective_gaps;  // final minus reference, per player
};

struct EquilibriumReport {
  std::string label;
  StrategyProfile profile;
  std::vector<LeaderResidual> leaders;
  std::optional<double> follower_residual;
  std::vector<ConsistencyGap> gaps;
  bool cse_candidate = false;
  bool ccse_candidate = false;
  std::vector<ReferenceDistance> references;
};

namespace detail {

inline constexpr double second_difference_step = 1e-4;
inline constexpr double response_difference_step = 1e-5;

inline double projected_step_residual(const ActionBox& box, double x, double descent_gradient) {
  return std::abs(box.project(x - descent_gradient) - x);
}

}  // namespace detail

/// First- and second-order residuals of the leaders' conjectured problems at
/// `profile`, plus the follower's projected stationarity residual. The
/// second-order check applies to the descent form and is waived at a box face
/// whose outward direction the gradient points into.
inline EquilibriumReport cse_residual(const GameSpec& game, const ConjectureSet& conj, const StrategyProfile& profile,
                                      PlayMode mode, const AnalysisTolerances& tol = {}) {
  game.check_profile(profile);
  EquilibriumReport rep;
  rep.profile = profile;
  const double h = detail::second_difference_step;
  bool all_ok = true;
  for (std::size_t i = 0; i < game.leader_count(); ++i) {
    const double xi = profile.leader_actions[i];
    const ActionBox& box = game.leader_box(i);
    LeaderResidual r;
    r.gradient = conjectured_gradient(game, conj, i, xi, mode, profile.follower_action).total;
    r.projected_residual = detail::projected_step_residual(box, xi, r.gradient);
    const double gp = conjectured_gradient(game, conj, i, xi + h, mode, profile.follower_action).total;
    const double gm = conjectured_gradient(game, conj, i, xi - h, mode, profile.follower_action).total;
    r.second_derivative = (gp - gm) / (2.0 * h);
    const bool pinned_low = xi <= box.lower() && r.gradient > 0;
    const bool pinned_high = xi >= box.upper() && r.gradient < 0;
    r.on_boundary = box.on_boundary(xi);
    r.second_order_ok = pinned_low || pinned_high || r.second_derivative > 0;
    all_ok = all_ok && r.projected_residual < tol.stationarity && r.second_order_ok;
    rep.leaders.push_back(r);
  }
  if (game.has_follower()) {
    const double y = profile.follower_action;
    const double d = descent_sign(game.follower_sense()) * game.follower_derivative(profile.leader_actions, y);
    rep.follower_residual = detail::projected_step_residual(game.follower_box(), y, d);
    all_ok = all_ok && *rep.follower_residual < tol.follower;
  }
  rep.cse_candidate = all_ok;
  rep.ccse_candidate = false;
  return rep;
}

namespace detail {

// Central difference of `f` at x, one-sided where the box cuts the stencil.
template <class F>
double box_difference(const F& f, const ActionBox& box, double x, double h) {
  const double lo = std::max(box.lower(), x - h);
  const double hi = std::min(box.upper(), x + h);
  return (f(hi) - f(lo)) / (hi - lo);
}

}  // namespace detail

/// |gamma_i^j'(x_i) - d x_j^* / d x_i| for every peer pair and, with a
/// follower in Stackelberg mode, |gamma_i^y'(x_i) - d y^* / d x_i|; the
/// best-response derivatives are differences of the best-response operations.
inline std::vector<ConsistencyGap> consistency_gap(const GameSpec& game, const ConjectureSet& conj,
                                                   const StrategyProfile& profile, PlayMode mode) {
  game.check_profile(profile);
  const std::size_t n = game.leader_count();
  const double h = detail::response_difference_step;
  std::vector<ConsistencyGap> gaps;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = profile.leader_actions[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto response = [&](double v) {
        std::vector<double> x = profile.leader_actions;
        x[i] = v;
        return leader_best_response(game, j, peers_of(x, j), profile.follower_action);
      };
      ConsistencyGap g;
      g.owner = i;
      g.target = PlayerId::leader(j);
      g.conjecture_slope = conj.about(i, j).input_derivative(xi);
      g.response_slope = detail::box_difference(response, game.leader_box(i), xi, h);
      g.gap = std::abs(g.conjecture_slope - g.response_slope);
      gaps.push_back(g);
    }
    if (game.has_follower() && mode == PlayMode::stackelberg) {
      auto response = [&](double v) {
        std::vector<double> x = profile.leader_actions;
        x[i] = v;
        return follower_best_response(game, x);
      };
      ConsistencyGap g;
      g.owner = i;
      g.target = PlayerId::follower();
      g.conjecture_slope = conj.about_follower(i).input_derivative(xi);
      g.response_slope = detail::box_difference(response, game.leader_box(i), xi, h);
      g.gap = std::abs(g.conjecture_slope - g.response_slope);
      gaps.push_back(g);
    }
  }
  return gaps;
}

/// Residuals, consistency gaps and both candidate flags in one report.
inline EquilibriumReport equilibrium_report(const GameSpec& game, const ConjectureSet& conj,
                                            const StrategyProfile& profile, PlayMode mode,
                                            const AnalysisTolerances& tol = {}) {
  EquilibriumReport rep = cse_residual(game, conj, profile, mode, tol);
  rep.gaps = consistency_gap(game, conj, profile, mode);
  rep.ccse_candidate = rep.cse_candidate && std::all_of(rep.gaps.begin(), rep.gaps.end(), [&](const auto& g) {
                         return g.gap < tol.consistency;
                       });
  return rep;
}

/// Conjectures a plain gradient player implicitly holds: constants equal to
/// the observed actions.
inline ConjectureSet constant_conjectures(const GameSpec& game, const StrategyProfile& profile) {
  ConjectureSet set;
  set.leaders.resize(game.leader_count());
  for (std::size_t i = 0; i < game.leader_count(); ++i) {
    for (std::size_t j = 0; j < game.leader_count(); ++j) {
      if (j != i) set.leaders[i].about.emplace(j, ConjectureModel(Affine{0.0, profile.leader_actions[j]}, true));
    }
    if (game.has_follower()) set.leaders[i].follower = ConjectureModel(Affine{0.0, profile.follower_action}, true);
  }
  return set;
}

struct LipschitzEstimate {
  double m1 = 0.0;  // leaders' objective gradients over (x, y)
  double m2 = 0.0;  // follower best-response gradient over x
  double constant() const { return m1 * std::sqrt(1.0 + m2 * m2); }
};

struct LipschitzOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  double safety = 1.1;
};

/// Largest observed gradient norms over uniform samples and all box corners,
/// times the safety factor. Game-supplied constants take precedence.
inline LipschitzEstimate estimate_lipschitz(const GameSpec& game, const LipschitzOptions& opts = {}) {
  const std::size_t n = game.leader_count();
  const bool fol = game.has_follower();
  std::mt19937_64 rng(opts.seed);
  double m1 = 0.0, m2 = 0.0;

  auto visit = [&](const std::vector<double>& x, double y) {
    for (std::size_t i = 0; i < n; ++i) {
      const Partials d = game.leader_partials(i, x, y);
      double s = d.own * d.own;
      for (double v : d.others) s += v * v;
      if (fol) s += d.follower * d.follower;
      m1 = std::max(m1, std::sqrt(s));
    }
    if (fol) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        auto response = [&](double v) {
          std::vector<double> z = x;
          z[i] = v;
          return follower_best_response(game, z);
        };
        const double g = detail::box_difference(response, game.leader_box(i), x[i], detail::response_difference_step);
        s += g * g;
      }
      m2 = std::max(m2, std::sqrt(s));
    }
  };

  const std::size_t dims = n + (fol ? 1 : 0);
  auto coordinate_box = [&](std::size_t k) -> const ActionBox& {
    return k < n ? game.leader_box(k) : game.follower_box();
  };
  for (std::size_t mask = 0; mask < (std::size_t{1} << dims); ++mask) {
    std::vector<double> x(n);
    double y = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const ActionBox& b = coordinate_box(k);
      const double v = (mask >> k) & 1u ? b.upper() : b.lower();
      if (k < n) x[k] = v; else y = v;
    }
    visit(x, y);
  }
  for (std::size_t s = 0; s < opts.samples; ++s) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::uniform_real_distribution<double>(game.leader_box(i).lower(), game.leader_box(i).upper())(rng);
    }
    double y = 0.0;
    if (fol) y = std::uniform_real_distribution<double>(game.follower_box().lower(), game.follower_box().upper())(rng);
    visit(x, y);
  }
  LipschitzEstimate est{opts.safety * m1, opts.safety * m2};
  if (auto v = game.lipschitz_objective()) est.m1 = *v;
  if (auto v = game.lipschitz_response()) est.m2 = *v;
  return est;
}

struct BoundCheck {
  std::vector<double> lhs;  // per leader
  double rhs = 0.0;
  double distance = 0.0;
  bool holds = false;
};

/// |f_i(x*, y*(x*)) - f_i(xg, y*(xg))| <= M1 sqrt(1 + M2^2) |x* - xg| for
/// every leader, with the follower best-responding at both profiles.
inline BoundCheck bound_check(const GameSpec& game, const std::vector<double>& se_leaders,
                              const std::vector<double>& cse_leaders, double m1, double m2) {
  game.check_profile({se_leaders, game.has_follower() ? game.follower_box().lower() : 0.0});
  game.check_profile({cse_leaders, game.has_follower() ? game.follower_box().lower() : 0.0});
  if (!(m1 >= 0) || !(m2 >= 0)) throw config_error("Lipschitz constants must be non-negative");
  const double ys = game.has_follower() ? follower_best_response(game, se_leaders) : 0.0;
  const double yc = game.has_follower() ? follower_best_response(game, cse_leaders) : 0.0;
  BoundCheck out;
  double d2 = 0.0;
  for (std::size_t i = 0; i < se_leaders.size(); ++i) d2 += (se_leaders[i] - cse_leaders[i]) * (se_leaders[i] - cse_leaders[i]);
  out.distance = std::sqrt(d2);
  out.rhs = m1 * std::sqrt(1.0 + m2 * m2) * out.distance;
  out.holds = true;
  for (std::size_t i = 0; i < game.leader_count(); ++i) {
    out.lhs.push_back(std::abs(game.leader_value(i, se_leaders, ys) - game.leader_value(i, cse_leaders, yc)));
    out.holds = out.holds && out.lhs.back() <= out.rhs;
  }
  return out;
}

/// A named reference outcome. `actions` and `objectives` list every player,
/// leaders first and then the follower when the game has one.
struct ReferencePoint {
  std::string name;
  std::string source;  // "closed_form" or "table"
  std::vector<double> actions;
  std::vector<double> objectives;
};

struct ReferenceEquilibria {
  std::string game;
  std::vector<ReferencePoint> points;
  std::string baseline = "NE";  // "beats" column
  std::string ceiling = "SE";   // "below" column

  const ReferencePoint* find(const std::string& name) const {
    for (const auto& p : points) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }
  const ReferencePoint& at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw input_error("no reference point '" + name + "' for game " + game);
  }
};

namespace olsder {

struct Point {
  double x1, x2;
};

inline Point nash() {
  // x1 = 0.84 x2 + 72.24, x2 = 0.25 x1 + 30.6
  const double x1 = (72.24 + 0.84 * 30.6) / (1.0 - 0.84 * 0.25);
  return {x1, response2(x1)};
}

inline Point stackelberg() {
  // d/dx1 f1(x1, 0.25 x1 + 30.6) = -14.5 x1 + 2007.6
  const double x1 = 2007.6 / 14.5;
  return {x1, response2(x1)};
}

inline Point social_optimum() {
  // grad(f1 + f2) = 0: -25 x1 + 46 x2 + 556 = 0, 46 x1 - 100 x2 + 1296 = 0
  const double det = -25.0 * -100.0 - 46.0 * 46.0;
  const double x1 = (-556.0 * -100.0 - 46.0 * -1296.0) / det;
  const double x2 = (-25.0 * -1296.0 - -556.0 * 46.0) / det;
  return {x1, x2};
}

}  // namespace olsder

/// Closed-form NE, SE and SWO plus the tabulated rows; the CCE is data only.
/// The point layout follows the game's players, which is (x1, x2) in both
/// modes.
inline ReferenceEquilibria olsder_reference() {
  ReferenceEquilibria refs;
  refs.game = "olsder";
  refs.baseline = "NE";
  refs.ceiling = "SE_table";
  auto closed = [](std::string name, olsder::Point p) {
    return ReferencePoint{std::move(name), "closed_form", {p.x1, p.x2}, {olsder::f1(p.x1, p.x2), olsder::f2(p.x1, p.x2)}};
  };
  refs.points.push_back(closed("NE", olsder::nash()));
  refs.points.push_back(closed("SE", olsder::stackelberg()));
  refs.points.push_back(closed("SWO", olsder::social_optimum()));
  refs.points.push_back({"NE_table", "table", {123.98, 61.6}, {19979.8, 6722.13}});
  refs.points.push_back({"SE_table", "table", {138.04, 65.11}, {21411.6, 11415.8}});
  refs.points.push_back({"CCE", "table", {164.4, 81.0}, {32320.8, 19220.0}});
  refs.points.push_back({"SWO_table", "table", {300.04, 150.98}, {38141.2, 56548.7}});
  return refs;
}

struct DilemmaReference {
  double k = 0.0;
  double separation = 0.0;         // d* = 2 sqrt(ln|K|)
  double optimal_objective = 0.0;  // -ln|K| + |K| - 1
  double saddle_objective = 0.0;

  /// Leader payoff with the follower at the mean and separation d.
  double objective_at(double d) const {
    const double s = 0.25 * d * d;
    return -s - k * -std::expm1(-s);
  }

  /// Nearest point (x1, x2) on the equilibrium lines |x1 - x2| = d*.
  std::vector<double> nearest_equilibrium(double x1, double x2) const {
    const double mid = 0.5 * (x1 + x2);
    const double half = 0.5 * separation;
    return x1 <= x2 ? std::vector<double>{mid - half, mid + half} : std::vector<double>{mid + half, mid - half};
  }
};

inline DilemmaReference dilemma_reference(double k) {
  if (!(k < -1.0)) throw domain_error("leader's dilemma requires K < -1, got " + std::to_string(k));
  const double l = std::log(std::abs(k));
  return DilemmaReference{k, 2.0 * std::sqrt(l), -l + std::abs(k) - 1.0, 0.0};
}

/// Saddle and separated equilibrium for the dilemma in (x1, x2, y) layout.
inline ReferenceEquilibria dilemma_reference_points(double k) {
  const DilemmaReference d = dilemma_reference(k);
  ReferenceEquilibria refs;
  refs.game = "leaders_dilemma";
  refs.baseline = "saddle";
  refs.ceiling = "optimal";
  refs.points.push_back({"saddle", "closed_form", {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}});
  const double h = 0.5 * d.separation;
  refs.points.push_back({"optimal", "closed_form", {-h, h, 0.0}, {d.optimal_objective, d.optimal_objective, 0.0}});
  return refs;
}

inline std::vector<double> player_actions(const StrategyProfile& p, bool with_follower) {
  std::vector<double> v = p.leader_actions;
  if (with_follower) v.push_back(p.follower_action);
  return v;
}

/// Distances and objective gaps from a run's final row to each reference.
inline std::vector<ReferenceDistance> reference_distances(const RunTrace& trace, const ReferenceEquilibria& refs) {
  const auto& row = trace.final_row();
  const std::vector<double> a = player_actions(trace.final_profile(), row.follower_action.has_value());
  const std::vector<double> f = trace.final_player_objectives();
  std::vector<ReferenceDistance> out;
  for (const auto& p : refs.points) {
    if (p.actions.size() != a.size()) continue;
    ReferenceDistance d;
    d.name = p.name;
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - p.actions[k]) * (a[k] - p.actions[k]);
    d.distance = std::sqrt(s);
    for (std::size_t k = 0; k < f.size(); ++k) d.objective_gaps.push_back(f[k] - p.objectives[k]);
    out.push_back(std::move(d));
  }
  return out;
}

struct ComparisonRow {
  std::string label;
  std::size_t player = 0;  // 1-based over leaders then follower
  double final_objective = 0.0;
  std::vector<double> references;  // one per ReferenceEquilibria point
  bool beats_baseline = false;
  bool below_ceiling = false;
};

struct ComparisonTable {
  ReferenceEquilibria refs;
  std::vector<ComparisonRow> rows;
};

namespace detail {

inline bool at_least(double v, double ref, double rel) { return v >= ref - rel * std::abs(ref); }
inline bool at_most(double v, double ref, double rel) { return v <= ref + rel * std::abs(ref); }

}  // namespace detail

/// Final objective per player per run against every reference value, with
/// the baseline ("beats") and ceiling ("below") flags under relative slack.
inline ComparisonTable compare_runs(const std::vector<RunTrace>& traces, const ReferenceEquilibria& refs,
                                    const AnalysisTolerances& tol = {}) {
  ComparisonTable table;
  table.refs = refs;
  const ReferencePoint* base = refs.find(refs.baseline);
  const ReferencePoint* ceil = refs.find(refs.ceiling);
  for (const auto& tr : traces) {
    if (tr.rows.empty()) throw input_error("trace '" + tr.label + "' is empty");
    const std::vector<double> f = tr.final_player_objectives();
    for (std::size_t p = 0; p < f.size(); ++p) {
      ComparisonRow row;
      row.label = tr.label;
      row.player = p + 1;
      row.final_objective = f[p];
      for (const auto& r : refs.points) {
        row.references.push_back(p < r.objectives.size() ? r.objectives[p] : std::nan(""));
      }
      row.beats_baseline = base && p < base->objectives.size() && detail::at_least(f[p], base->objectives[p], tol.beats);
      row.below_ceiling = ceil && p < ceil->objectives.size() && detail::at_most(f[p], ceil->objectives[p], tol.below);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

/// Columns: label, player, final, then <ref> and delta_<ref> per reference,
/// then beats_<baseline> and below_<ceiling> (0/1).
inline std::string comparison_csv(const ComparisonTable& table) {
  std::vector<std::string> header{"label", "player", "final"};
  for (const auto& r : table.refs.points) {
    header.push_back(r.name);
    header.push_back("delta_" + r.name);
  }
  header.push_back("beats_" + table.refs.baseline);
  header.push_back("below_" + table.refs.ceiling);
  std::string out = io::join(header) + "\n";
  for (const auto& row : table.rows) {
    std::vector<std::string> c{row.label, std::to_string(row.player), io::format_real(row.final_objective)};
    for (double v : row.references) {
      c.push_back(io::format_real(v));
      c.push_back(io::format_real(row.final_objective - v));
    }
    c.push_back(row.beats_baseline ? "1" : "0");
    c.push_back(row.below_ceiling ? "1" : "0");
    out += io::join(c) + "\n";
  }
  return out;
}

/// Columns: name, source, a_1..a_P, f_1..f_P over all P players.
inline std::string references_csv(const ReferenceEquilibria& refs) {
  std::size_t players = 0;
  for (const auto& p : refs.points) players = std::max(players, p.actions.size());
  std::vector<std::string> header{"name", "source"};
  for (std::size_t k = 1; k <= players; ++k) header.push_back("a_" + std::to_string(k));
  for (std::size_t k = 1; k <= players; ++k) header.push_back("f_" + std::to_string(k));
  std::string out = io::join(header) + "\n";
  for (const auto& p : refs.points) {
    std::vector<std::string> c{p.name, p.source};
    for (std::size_t k = 0; k < players; ++k) c.push_back(k < p.actions.size() ? io::format_real(p.actions[k]) : "");
    for (std::size_t k = 0; k < players; ++k) c.push_back(k < p.objectives.size() ? io::format_real(p.objectives[k]) : "");
    out += io::join(c) + "\n";
  }
  return out;
}

inline std::string dilemma_reference_csv(const DilemmaReference& d) {
  return "K,separation,optimal_objective,saddle_objective\n" +
         io::join({io::format_real(d.k), io::format_real(d.separation), io::format_real(d.optimal_objective),
                   io::format_real(d.saddle_objective)}) +
         "\n";
}

/// One row per (label, leader): residuals, flags and the follower residual.
inline std::string report_csv(const std::vector<EquilibriumReport>& reports) {
  std::string out =
      "label,leader,action,gradient,projected_residual,second_derivative,second_order_ok,follower_residual,"
      "cse_candidate,ccse_candidate\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.leaders.size(); ++i) {
      const auto& l = r.leaders[i];
      out += io::join({r.label, std::to_string(i + 1), io::format_real(r.profile.leader_actions[i]),
                       io::format_real(l.gradient), io::format_real(l.projected_residual),
                       io::format_real(l.second_derivative), l.second_order_ok ? "1" : "0",
                       r.follower_residual ? io::format_real(*r.follower_residual) : "",
                       r.cse_candidate ? "1" : "0", r.ccse_candidate ? "1" : "0"}) +
             "\n";
    }
  }
  return out;
}

inline std::string gaps_csv(const std::vector<EquilibriumReport>& reports) {
  std::string out = "label,owner,target,conjecture_slope,response_slope,gap\n";
  for (const auto& r : reports) {
    for (const auto& g : r.gaps) {
      out += io::join({r.label, std::to_string(g.owner + 1), g.target.is_follower() ? "y" : std::to_string(g.target.index() + 1),
                       io::format_real(g.conjecture_slope), io::format_real(g.response_slope), io::format_real(g.gap)}) +
             "\n";
    }
  }
  return out;
}

/// Plain-text summary of reports and comparisons.
inline std::string report_text(const std::vector<EquilibriumReport>& reports, const ComparisonTable* table) {
  std::ostringstream os;
  os.precision(10);
  for (const auto& r : reports) {
    os << "[" << r.label << "]\n  profile:";
    for (double v : r.profile.leader_actions) os << ' ' << v;
    if (r.follower_residual) os << "  y=" << r.profile.follower_action;
    os << "\n";
    for (std::size_t i = 0; i < r.leaders.size(); ++i) {
      const auto& l = r.leaders[i];
      os << "  leader " << i + 1 << ": gradient " << l.gradient << ", projected residual " << l.projected_residual
         << ", curvature (descent form) " << l.second_derivative << (l.second_order_ok ? " ok" : " FAILS") << "\n";
    }
    if (r.follower_residual) os << "  follower residual " << *r.follower_residual << "\n";
    for (const auto& g : r.gaps) {
      os << "  gap gamma_" << g.owner + 1 << "^" << (g.target.is_follower() ? "y" : std::to_string(g.target.index() + 1))
         << ": conjecture slope " << g.conjecture_slope << " vs response slope " << g.response_slope << " -> "
         << g.gap << "\n";
    }
    for (const auto& d : r.references) {
      os << "  vs " << d.name << ": distance " << d.distance << ", objective gaps";
      for (double v : d.objective_gaps) os << ' ' << v;
      os << "\n";
    }
    os << "  CSE candidate: " << (r.cse_candidate ? "yes" : "no") << ", CCSE candidate: "
       << (r.ccse_candidate ? "yes" : "no") << "\n";
  }
  if (table) {
    os << "\nfinal objectives (beats " << table->refs.baseline << " / below " << table->refs.ceiling << "):\n";
    for (const auto& row : table->rows) {
      os << "  " << row.label << " player " << row.player << ": " << row.final_objective << "  "
         << (row.beats_baseline ? "beats" : "does not beat") << ", " << (row.below_ceiling ? "below" : "above")
         << "\n";
    }
  }
  return os.str();
}

}  // namespace conjstack
