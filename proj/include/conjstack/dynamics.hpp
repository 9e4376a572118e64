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
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conjstack/conjecture_set.hpp"
#include "conjstack/errors.hpp"
#include "conjstack/game.hpp"
#include "conjstack/io.hpp"

namespace conjstack {

/// Step size eta^t: constant, or eta0 / (1 + t)^alpha with 0.5 < alpha <= 1
/// (divergent sum, summable squares).
class StepSchedule {
 public:
  enum class Kind { constant, robbins_monro };

  static StepSchedule constant(double eta) {
    if (!(eta > 0)) throw config_error("step size must be positive");
    return StepSchedule(Kind::constant, eta, 0.0);
  }
  static StepSchedule robbins_monro(double eta0, double alpha = 0.6) {
    if (!(eta0 > 0)) throw config_error("robbins_monro eta0 must be positive");
    if (!(alpha > 0.5 && alpha <= 1.0)) {
      throw config_error("robbins_monro alpha must lie in (0.5, 1], got " + std::to_string(alpha));
    }
    return StepSchedule(Kind::robbins_monro, eta0, alpha);
  }

  Kind kind() const noexcept { return kind_; }
  double eta0() const noexcept { return eta0_; }
  double alpha() const noexcept { return alpha_; }

  double at(std::size_t t) const {
    if (kind_ == Kind::constant) return eta0_;
    return eta0_ / std::pow(1.0 + static_cast<double>(t), alpha_);
  }

 private:
  StepSchedule(Kind k, double eta0, double alpha) : kind_(k), eta0_(eta0), alpha_(alpha) {}
  Kind kind_;
  double eta0_;
  double alpha_;
};

enum class PlayMode { stackelberg, simultaneous };

struct PlayConfig {
  std::size_t iterations = 5000;
  StepSchedule schedule = StepSchedule::constant(1e-3);
  double gradient_noise_std = 0.0;
  std::uint64_t seed = 0;
  PlayMode mode = PlayMode::stackelberg;
  // Stop once every leader's |gradient| falls below this; 0 never stops early.
  double stop_tolerance = 0.0;
  // Evaluate leaders' gradients on separate threads (same results).
  bool parallel = false;
  double divergence_limit = 1e8;

  void validate() const {
    if (iterations == 0) throw config_error("play.iterations must be positive");
    if (!(gradient_noise_std >= 0)) throw config_error("play.gradient_noise_std must be >= 0");
    if (!(stop_tolerance >= 0)) throw config_error("play.stop_tolerance must be >= 0");
  }
};

/// Descent-form components of leader i's conjectured gradient:
/// own = d_i f_i, others = sum_j d_j f_i * gamma_i^j', follower = d_y f_i * gamma_i^y'.
struct ConjecturedGradient {
  double own = 0.0;
  double others = 0.0;
  double follower = 0.0;
  double total = 0.0;
};

/// Leader i's full leader vector and follower action as it imagines them
/// when playing x_i.
inline StrategyProfile conjectured_profile(const GameSpec& game, const ConjectureSet& conj, std::size_t i,
                                           double x_i, PlayMode mode, double current_y = 0.0) {
  StrategyProfile p;
  p.leader_actions.resize(game.leader_count());
  for (std::size_t j = 0; j < game.leader_count(); ++j) {
    p.leader_actions[j] = (j == i) ? x_i : conj.about(i, j).predict(x_i);
  }
  p.follower_action = current_y;
  if (game.has_follower()) {
    const auto& f = conj.leaders.at(i).follower;
    if (f) {
      p.follower_action = f->predict(x_i);
    } else if (mode == PlayMode::stackelberg) {
      (void)conj.about_follower(i);  // throws config_error
    }
  }
  return p;
}

/// Gradient of the conjectured objective x_i -> f_i(x_i, gamma_i^{-i}(x_i), gamma_i^y(x_i)),
/// chained through each conjecture's input derivative, in descent form. In
/// simultaneous mode the follower term is dropped (and y is the follower
/// conjecture if present, else `current_y`).
inline ConjecturedGradient conjectured_gradient(const GameSpec& game, const ConjectureSet& conj, std::size_t i,
                                                double x_i, PlayMode mode, double current_y = 0.0) {
  const StrategyProfile p = conjectured_profile(game, conj, i, x_i, mode, current_y);
  const Partials d = game.leader_partials(i, p.leader_actions, p.follower_action);
  const double s = descent_sign(game.leader_sense(i));

  ConjecturedGradient g;
  g.own = s * d.own;
  for (std::size_t j = 0, k = 0; j < game.leader_count(); ++j) {
    if (j == i) continue;
    g.others += s * d.others[k++] * conj.about(i, j).input_derivative(x_i);
  }
  if (mode == PlayMode::stackelberg && game.has_follower()) {
    g.follower = s * d.follower * conj.about_follower(i).input_derivative(x_i);
  }
  g.total = g.own + g.others + g.follower;
  return g;
}

/// Conjectured objective value (raw sense) f~_i(x_i).
inline double conjectured_objective(const GameSpec& game, const ConjectureSet& conj, std::size_t i, double x_i,
                                    PlayMode mode, double current_y = 0.0) {
  const StrategyProfile p = conjectured_profile(game, conj, i, x_i, mode, current_y);
  return game.leader_value(i, p.leader_actions, p.follower_action);
}

struct TraceRow {
  std::size_t t = 0;
  std::vector<double> leader_actions;
  std::optional<double> follower_action;
  std::vector<double> gradients;  // descent-form total per leader
  std::vector<double> leader_objectives;
  std::optional<double> follower_objective;
};

struct RunTrace {
  std::string label;
  std::vector<TraceRow> rows;
  // Component breakdown per row and leader; empty for traces read from CSV
  // and for the gradient baseline.
  std::vector<std::vector<ConjecturedGradient>> components;
  bool stopped_early = false;

  const TraceRow& final_row() const {
    if (rows.empty()) throw input_error("trace '" + label + "' is empty");
    return rows.back();
  }

  StrategyProfile final_profile() const {
    const auto& r = final_row();
    return StrategyProfile{r.leader_actions, r.follower_action.value_or(0.0)};
  }

  /// Leaders' objectives followed by the follower's, at the final row.
  std::vector<double> final_player_objectives() const {
    const auto& r = final_row();
    std::vector<double> v = r.leader_objectives;
    if (r.follower_objective) v.push_back(*r.follower_objective);
    return v;
  }
};

namespace detail {

inline TraceRow make_row(const GameSpec& game, std::size_t t, const std::vector<double>& x, double y,
                         std::vector<double> gradients) {
  TraceRow r;
  r.t = t;
  r.leader_actions = x;
  r.gradients = std::move(gradients);
  for (std::size_t i = 0; i < game.leader_count(); ++i) r.leader_objectives.push_back(game.leader_value(i, x, y));
  if (game.has_follower()) {
    r.follower_action = y;
    r.follower_objective = game.follower_value(x, y);
  }
  return r;
}

inline void check_finite(const TraceRow& r, double limit, std::size_t t) {
  auto bad = [limit](double v) { return !std::isfinite(v) || std::abs(v) > limit; };
  for (double v : r.leader_actions) {
    if (bad(v)) throw divergence_error("leader action diverged", t);
  }
  for (double v : r.gradients) {
    if (!std::isfinite(v)) throw divergence_error("non-finite gradient", t);
  }
  for (double v : r.leader_objectives) {
    if (!std::isfinite(v)) throw divergence_error("non-finite objective", t);
  }
  if (r.follower_action && bad(*r.follower_action)) throw divergence_error("follower action diverged", t);
}

inline bool below_tolerance(const std::vector<double>& g, double tol) {
  for (double v : g) {
    if (!(std::abs(v) < tol)) return false;
  }
  return true;
}

// Shared driver: `gradient_of(i, x, y)` returns leader i's descent gradient
// at the time-t snapshot. Updates are Jacobi-style: every leader reads time-t
// values and writes time t+1.
template <class GradientFn>
RunTrace play(const GameSpec& game, const PlayConfig& cfg, const StrategyProfile& x0, std::string label,
              const GradientFn& gradient_of, bool record_components) {
  cfg.validate();
  game.check_profile(x0);
  if (cfg.mode == PlayMode::stackelberg && !game.has_follower()) {
    throw config_error("stackelberg play requires a game with a follower");
  }
  const std::size_t n = game.leader_count();
  const bool follower_responds = cfg.mode == PlayMode::stackelberg;

  std::vector<double> x = x0.leader_actions;
  double y = x0.follower_action;
  if (follower_responds) y = follower_best_response(game, x);

  auto evaluate_all = [&](std::vector<ConjecturedGradient>& comps) {
    comps.assign(n, {});
    if (cfg.parallel && n > 1) {
      std::vector<std::future<ConjecturedGradient>> jobs;
      for (std::size_t i = 0; i < n; ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i] { return gradient_of(i, x, y); }));
      }
      for (std::size_t i = 0; i < n; ++i) comps[i] = jobs[i].get();
    } else {
      for (std::size_t i = 0; i < n; ++i) comps[i] = gradient_of(i, x, y);
    }
    std::vector<double> totals(n);
    for (std::size_t i = 0; i < n; ++i) totals[i] = comps[i].total;
    return totals;
  };

  RunTrace trace;
  trace.label = std::move(label);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<ConjecturedGradient> comps;
  std::vector<double> grads = evaluate_all(comps);
  trace.rows.push_back(make_row(game, 0, x, y, grads));
  detail::check_finite(trace.rows.back(), cfg.divergence_limit, 0);
  if (record_components) trace.components.push_back(comps);

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    if (cfg.stop_tolerance > 0 && below_tolerance(grads, cfg.stop_tolerance)) {
      trace.stopped_early = true;
      break;
    }
    const double eta = cfg.schedule.at(t);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double noise = cfg.gradient_noise_std > 0 ? cfg.gradient_noise_std * gauss(rng) : 0.0;
      next[i] = game.leader_box(i).project(x[i] - eta * (grads[i] + noise));
    }
    x = std::move(next);
    if (follower_responds) y = follower_best_response(game, x);
    grads = evaluate_all(comps);
    trace.rows.push_back(make_row(game, t + 1, x, y, grads));
    detail::check_finite(trace.rows.back(), cfg.divergence_limit, t + 1);
    if (record_components) trace.components.push_back(comps);
  }
  if (!trace.stopped_early && cfg.stop_tolerance > 0 && below_tolerance(grads, cfg.stop_tolerance)) {
    trace.stopped_early = true;
  }
  return trace;
}

}  // namespace detail

/// Conjectured-gradient play: x_i <- proj(x_i - eta^t (grad f~_i(x_i) + zeta_i^t)),
/// then the follower best-responds (Stackelberg mode).
inline RunTrace run_conjectural_dynamics(const GameSpec& game, const ConjectureSet& conj, const PlayConfig& cfg,
                                         const StrategyProfile& x0, std::string label = "costal") {
  conj.validate(game.leader_count(), cfg.mode == PlayMode::stackelberg && game.has_follower());
  auto grad = [&](std::size_t i, const std::vector<double>& x, double y) {
    return conjectured_gradient(game, conj, i, x[i], cfg.mode, y);
  };
  return detail::play(game, cfg, x0, std::move(label), grad, true);
}

/// Baseline: each leader descends its own partial at the true current
/// profile, x_i <- proj(x_i - eta^t (d_i f_i(x, y) + zeta_i^t)).
inline RunTrace run_gd_baseline(const GameSpec& game, const PlayConfig& cfg, const StrategyProfile& x0,
                                std::string label = "GD") {
  auto grad = [&](std::size_t i, const std::vector<double>& x, double y) {
    ConjecturedGradient g;
    g.own = descent_sign(game.leader_sense(i)) * game.leader_partials(i, x, y).own;
    g.total = g.own;
    return g;
  };
  return detail::play(game, cfg, x0, std::move(label), grad, false);
}

/// Header: t,x_1..x_N,y,grad_1..grad_N,f_1..f_N,g. The y and g cells are
/// empty for games without a follower.
inline std::string trace_csv(const RunTrace& trace) {
  const std::size_t n = trace.rows.empty() ? 0 : trace.rows.front().leader_actions.size();
  std::vector<std::string> header{"t"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("x_" + std::to_string(i));
  header.push_back("y");
  for (std::size_t i = 1; i <= n; ++i) header.push_back("grad_" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) header.push_back("f_" + std::to_string(i));
  header.push_back("g");

  std::string out = io::join(header) + "\n";
  for (const auto& r : trace.rows) {
    std::vector<std::string> cells{std::to_string(r.t)};
    for (double v : r.leader_actions) cells.push_back(io::format_real(v));
    cells.push_back(r.follower_action ? io::format_real(*r.follower_action) : "");
    for (double v : r.gradients) cells.push_back(io::format_real(v));
    for (double v : r.leader_objectives) cells.push_back(io::format_real(v));
    cells.push_back(r.follower_objective ? io::format_real(*r.follower_objective) : "");
    out += io::join(cells) + "\n";
  }
  return out;
}

inline RunTrace parse_trace_csv(const std::string& text, const std::string& label) {
  const io::CsvTable table = io::parse_csv(text, "trace " + label);
  std::size_t n = 0;
  while (table.has_column("x_" + std::to_string(n + 1))) ++n;
  if (n == 0) throw parse_error("trace " + label + ": no leader columns");
  const std::size_t tcol = table.column("t"), ycol = table.column("y"), gcol = table.column("g");
  std::vector<std::size_t> xc, dc, fc;
  for (std::size_t i = 1; i <= n; ++i) {
    xc.push_back(table.column("x_" + std::to_string(i)));
    dc.push_back(table.column("grad_" + std::to_string(i)));
    fc.push_back(table.column("f_" + std::to_string(i)));
  }
  RunTrace trace;
  trace.label = label;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    const std::string where = "trace " + label + " row " + std::to_string(k + 1);
    TraceRow r;
    r.t = static_cast<std::size_t>(io::parse_real(row[tcol], where));
    for (std::size_t i = 0; i < n; ++i) {
      r.leader_actions.push_back(io::parse_real(row[xc[i]], where));
      r.gradients.push_back(io::parse_real(row[dc[i]], where));
      r.leader_objectives.push_back(io::parse_real(row[fc[i]], where));
    }
    if (!row[ycol].empty()) r.follower_action = io::parse_real(row[ycol], where);
    if (!row[gcol].empty()) r.follower_objective = io::parse_real(row[gcol], where);
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

}  // namespace conjstack
