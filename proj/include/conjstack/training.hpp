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
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conjstack/conjecture_set.hpp"
#include "conjstack/errors.hpp"
#include "conjstack/game.hpp"
#include "conjstack/io.hpp"

namespace conjstack {

struct SamplePair {
  double own_action = 0.0;
  double observed_response = 0.0;
};

/// Dataset D_i^j (target = leader j) or D_i^y (target = follower) of leader
/// `owner`. pairs[t] was generated at sample index t.
struct SampleSet {
  std::size_t owner = 0;
  PlayerId target = PlayerId::follower();
  std::vector<SamplePair> pairs;
};

/// "gamma_<i>_<j>" or "gamma_<i>_y" with 1-based leader indices.
inline std::string model_id(std::size_t owner, PlayerId target) {
  return "gamma_" + std::to_string(owner + 1) + "_" +
         (target.is_follower() ? std::string("y") : std::to_string(target.index() + 1));
}

struct TrainConfig {
  std::size_t samples = 2000;  // T
  // Noise standard deviation in action units. When unset, each target uses
  // 5% of its box width.
  std::optional<double> sigma;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  // When unset: 1e-2 for affine/polynomial models, 1e-3 for neural ones.
  std::optional<double> learning_rate;
  std::uint64_t seed = 0;
  // Fit in standardized coordinates (inputs and targets shifted to zero mean
  // and scaled to unit deviation) and map the result back to raw units.
  // Neural starting weights are read in standardized units; affine and
  // polynomial starting points are converted from raw units.
  bool standardize = true;

  void validate() const {
    if (samples == 0) throw config_error("train.samples must be positive");
    if (batch_size == 0) throw config_error("train.batch_size must be positive");
    if (batch_size > samples) {
      throw config_error("train.batch_size (" + std::to_string(batch_size) + ") exceeds train.samples (" +
                         std::to_string(samples) + ")");
    }
    if (epochs == 0) throw config_error("train.epochs must be positive");
    if (sigma && !(*sigma >= 0.0 && std::isfinite(*sigma))) throw config_error("train.sigma must be >= 0");
    if (learning_rate && !(*learning_rate > 0.0)) throw config_error("train.learning_rate must be positive");
  }

  double sigma_for(const ActionBox& target_box) const { return sigma ? *sigma : 0.05 * target_box.width(); }

  double learning_rate_for(const ConjectureModel& m) const {
    if (learning_rate) return *learning_rate;
    return std::holds_alternative<NeuralNet>(m.kind()) ? 1e-3 : 1e-2;
  }
};

/// Noisy best-response datasets. For each sample t: leader actions and a
/// follower action are drawn uniformly from their boxes; the follower's
/// response to x^t and each leader's response to (x_{-i}^t, y^t) are
/// perturbed by independent N(0, sigma) draws and stored against every
/// other leader's own action. D_i^y exists only when `with_follower`.
///
/// Random stream order per sample: x_1..x_N, y, follower noise, leader
/// noises 1..N.
inline std::vector<SampleSet> generate_samples(const GameSpec& game, const TrainConfig& cfg, bool with_follower) {
  cfg.validate();
  if (with_follower && !game.has_follower()) throw config_error("game '" + game.name() + "' has no follower");
  const std::size_t n = game.leader_count();
  const std::size_t T = cfg.samples;

  std::vector<SampleSet> sets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sets.push_back({i, PlayerId::leader(j), {}});
    }
    if (with_follower) sets.push_back({i, PlayerId::follower(), {}});
  }
  for (auto& s : sets) s.pairs.reserve(T);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform_in = [&](const ActionBox& b) { return b.lower() + b.width() * unit(rng); };

  std::vector<double> x(n);
  std::vector<double> noisy(n);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) x[i] = uniform_in(game.leader_box(i));
    const double y = game.has_follower() ? uniform_in(game.follower_box()) : 0.0;

    double noisy_y = 0.0;
    try {
      if (with_follower) {
        noisy_y = follower_best_response(game, x) + cfg.sigma_for(game.follower_box()) * gauss(rng);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto peers = peers_of(x, i);
        noisy[i] = leader_best_response(game, i, peers, y) + cfg.sigma_for(game.leader_box(i)) * gauss(rng);
      }
    } catch (const solver_error& e) {
      throw solver_error(std::string("sample ") + std::to_string(t) + ": " + e.what(), e.residual());
    }

    for (auto& s : sets) {
      const double response = s.target.is_follower() ? noisy_y : noisy[s.target.index()];
      s.pairs.push_back({x[s.owner], response});
    }
  }
  return sets;
}

/// Mean squared loss (1/|D|) sum (target - gamma(x))^2.
inline double mean_squared_loss(const ConjectureModel& m, const std::vector<SamplePair>& data) {
  double acc = 0.0;
  for (const auto& p : data) {
    const double r = p.observed_response - m.predict(p.own_action);
    acc += r * r;
  }
  return data.empty() ? 0.0 : acc / static_cast<double>(data.size());
}

struct LossCurve {
  std::string model_id;
  std::vector<double> epoch_loss;  // raw-unit mean loss after each epoch
};

struct TrainingResult {
  ConjectureSet conjectures;
  std::vector<LossCurve> curves;
};

namespace detail {

struct Standardizer {
  double x_mean = 0.0, x_scale = 1.0, t_mean = 0.0, t_scale = 1.0;

  static Standardizer fit(const std::vector<SamplePair>& data) {
    Standardizer s;
    const double n = static_cast<double>(data.size());
    for (const auto& p : data) {
      s.x_mean += p.own_action;
      s.t_mean += p.observed_response;
    }
    s.x_mean /= n;
    s.t_mean /= n;
    double vx = 0.0, vt = 0.0;
    for (const auto& p : data) {
      vx += (p.own_action - s.x_mean) * (p.own_action - s.x_mean);
      vt += (p.observed_response - s.t_mean) * (p.observed_response - s.t_mean);
    }
    s.x_scale = vx > 0 ? std::sqrt(vx / n) : 1.0;
    s.t_scale = vt > 0 ? std::sqrt(vt / n) : 1.0;
    return s;
  }

  ConjectureModel to_standard(const ConjectureModel& raw) const {
    return compose_affine(raw, x_scale, x_mean, 1.0 / t_scale, -t_mean / t_scale);
  }
  ConjectureModel to_raw(const ConjectureModel& standard) const {
    return compose_affine(standard, 1.0 / x_scale, -x_mean / x_scale, t_scale, t_mean);
  }
};

}  // namespace detail

/// Plain mini-batch SGD on L = (1/|B|) sum_b (target_b - gamma(x_b))^2 for a
/// single model. Returns the fitted model (raw units) and its loss curve.
inline ConjectureModel fit_conjecture(const ConjectureModel& initial, const std::vector<SamplePair>& data,
                                      const TrainConfig& cfg, std::uint64_t shuffle_seed, LossCurve& curve) {
  cfg.validate();
  if (data.size() < cfg.batch_size) {
    throw config_error("dataset of " + std::to_string(data.size()) + " samples is smaller than the batch size");
  }
  const double lr = cfg.learning_rate_for(initial);
  const auto scaler = cfg.standardize ? detail::Standardizer::fit(data) : detail::Standardizer{};

  std::vector<SamplePair> work = data;
  if (cfg.standardize) {
    for (auto& p : work) {
      p.own_action = (p.own_action - scaler.x_mean) / scaler.x_scale;
      p.observed_response = (p.observed_response - scaler.t_mean) / scaler.t_scale;
    }
  }
  ConjectureModel model = initial;
  if (cfg.standardize && !std::holds_alternative<NeuralNet>(initial.kind())) model = scaler.to_standard(initial);

  std::mt19937_64 rng(shuffle_seed);
  std::vector<std::size_t> order(work.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> theta = model.parameters();
  std::vector<double> grad(theta.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& p = work[order[k]];
        const double residual = p.observed_response - model.predict(p.own_action);
        const auto g = model.parameter_gradient(p.own_action, residual);
        for (std::size_t q = 0; q < g.size(); ++q) grad[q] += g[q];
      }
      // d/dtheta of the squared residual is twice the 0.5*r^2 gradient.
      const double step = lr * 2.0 / static_cast<double>(stop - start);
      for (std::size_t q = 0; q < theta.size(); ++q) theta[q] -= step * grad[q];
      model.set_parameters(theta);
    }
    const ConjectureModel raw = cfg.standardize ? scaler.to_raw(model) : model;
    const double loss = mean_squared_loss(raw, data);
    if (!std::isfinite(loss)) {
      throw training_error("non-finite loss for " + curve.model_id + " at epoch " + std::to_string(epoch));
    }
    curve.epoch_loss.push_back(loss);
  }
  ConjectureModel out = cfg.standardize ? scaler.to_raw(model) : model;
  out.set_frozen(initial.frozen());
  return out;
}

/// Index of a model in the canonical enumeration (leader-major; peers in
/// increasing index, then the follower model).
inline std::size_t model_index(std::size_t leader_count, std::size_t owner, PlayerId target, bool with_follower) {
  const std::size_t per_leader = (leader_count - 1) + (with_follower ? 1 : 0);
  std::size_t k = owner * per_leader;
  if (target.is_follower()) return k + (leader_count - 1);
  return k + (target.index() < owner ? target.index() : target.index() - 1);
}

/// Fits every non-frozen model in `models` to its dataset. Model k in the
/// canonical enumeration shuffles with seed (cfg.seed XOR k).
inline TrainingResult train_conjectures(const std::vector<SampleSet>& sets, const ConjectureSet& models,
                                        const TrainConfig& cfg) {
  cfg.validate();
  TrainingResult result{models, {}};
  const std::size_t n = models.leaders.size();
  bool with_follower = false;
  for (const auto& s : sets) with_follower = with_follower || s.target.is_follower();

  for (const auto& s : sets) {
    if (s.owner >= n) throw config_error("sample set owner outside the conjecture set");
    ConjectureModel* slot = nullptr;
    auto& lc = result.conjectures.leaders[s.owner];
    if (s.target.is_follower()) {
      if (!lc.follower) throw config_error("no follower conjecture for leader " + std::to_string(s.owner + 1));
      slot = &*lc.follower;
    } else {
      auto it = lc.about.find(s.target.index());
      if (it == lc.about.end()) throw config_error("no conjecture for dataset " + model_id(s.owner, s.target));
      slot = &it->second;
    }
    if (slot->frozen()) continue;
    LossCurve curve{model_id(s.owner, s.target), {}};
    const std::uint64_t seed = cfg.seed ^ static_cast<std::uint64_t>(model_index(n, s.owner, s.target, with_follower));
    *slot = fit_conjecture(*slot, s.pairs, cfg, seed, curve);
    result.curves.push_back(std::move(curve));
  }
  return result;
}

/// CSV with columns t,owner,target,own_action,observed_response (1-based
/// owner; target is a 1-based leader index or "y").
inline std::string samples_csv(const std::vector<SampleSet>& sets) {
  std::string out = "t,owner,target,own_action,observed_response\n";
  std::size_t T = 0;
  for (const auto& s : sets) T = std::max(T, s.pairs.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (const auto& s : sets) {
      if (t >= s.pairs.size()) continue;
      out += std::to_string(t) + "," + std::to_string(s.owner + 1) + "," +
             (s.target.is_follower() ? std::string("y") : std::to_string(s.target.index() + 1)) + "," +
             io::format_real(s.pairs[t].own_action) + "," + io::format_real(s.pairs[t].observed_response) + "\n";
    }
  }
  return out;
}

/// CSV with columns model_id,epoch,loss.
inline std::string loss_csv(const std::vector<LossCurve>& curves) {
  std::string out = "model_id,epoch,loss\n";
  for (const auto& c : curves) {
    for (std::size_t e = 0; e < c.epoch_loss.size(); ++e) {
      out += c.model_id + "," + std::to_string(e) + "," + io::format_real(c.epoch_loss[e]) + "\n";
    }
  }
  return out;
}

}  // namespace conjstack
