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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "conjstack/analysis.hpp"
#include "conjstack/builtin_games.hpp"
#include "conjstack/conjecture_set.hpp"
#include "conjstack/dynamics.hpp"
#include "conjstack/errors.hpp"
#include "conjstack/io.hpp"
#include "conjstack/training.hpp"

namespace conjstack {

inline constexpr int config_schema_version = 1;

namespace detail {

// Read-only view of a JSON object that reports failures as
// config_error("<path>: <reason>") and rejects keys it was not asked about.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  const std::string& path() const noexcept { return path_; }
  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const nlohmann::json& raw(const std::string& key) const { return j_.at(key); }

  [[noreturn]] static void fail(const std::string& where, const std::string& why) {
    throw config_error(where + ": " + why);
  }

  void only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.count(k)) fail(at(k), "unknown key");
    }
  }

  double real(const std::string& key) const {
    if (!has(key)) fail(at(key), "required number is missing");
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(at(key), "expected a finite number");
    return d;
  }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }
  std::optional<double> maybe_real(const std::string& key) const {
    return has(key) ? std::optional<double>(real(key)) : std::nullopt;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 1) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail(at(key), "expected an integer");
    const auto n = v.get<long long>();
    if (n < static_cast<long long>(min)) fail(at(key), "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(n);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(at(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(at(key), "required string is missing");
    }
    if (!j_.at(key).is_string()) fail(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::vector<double> reals(const std::string& key) const {
    if (!has(key)) fail(at(key), "required array is missing");
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) fail(at(key) + "[" + std::to_string(k) + "]", "expected a number");
      out.push_back(v[k].get<double>());
    }
    return out;
  }

  ConfigReader child(const std::string& key) const {
    if (!has(key)) fail(at(key), "required object is missing");
    return ConfigReader(j_.at(key), at(key));
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// How to build one conjecture before training. Kinds: affine, polynomial,
/// neural, and the fixed forms quadratic (x^2) and quadratic_11 (x^2 + x),
/// which are frozen unless `frozen` says otherwise.
struct ConjectureSpec {
  std::string kind = "affine";
  std::size_t degree = 2;  // polynomial
  std::size_t width = 10;  // neural
  std::optional<bool> frozen;
  std::optional<std::vector<double>> params;  // initial parameter vector

  bool is_fixed_form() const { return kind == "quadratic" || kind == "quadratic_11"; }

  ConjectureModel build(std::uint64_t seed) const {
    ConjectureModel m;
    if (kind == "affine") {
      m = ConjectureModel(Affine{});
    } else if (kind == "polynomial") {
      m = ConjectureModel(Polynomial{std::vector<double>(degree + 1, 0.0)});
    } else if (kind == "neural") {
      m = ConjectureModel(NeuralNet::initialized(width, seed));
    } else if (kind == "quadratic") {
      m = ConjectureModel(Polynomial{{0.0, 0.0, 1.0}});
    } else if (kind == "quadratic_11") {
      m = ConjectureModel(Polynomial{{0.0, 1.0, 1.0}});
    } else {
      throw config_error("unknown conjecture kind '" + kind + "'");
    }
    if (params) {
      if (params->size() != m.parameter_count()) {
        throw config_error("conjecture kind '" + kind + "' takes " + std::to_string(m.parameter_count()) +
                           " parameters, got " + std::to_string(params->size()));
      }
      m.set_parameters(*params);
    }
    m.set_frozen(frozen.value_or(is_fixed_form()));
    return m;
  }

  static ConjectureSpec from_json(const detail::ConfigReader& r) {
    r.only({"kind", "degree", "width", "frozen", "params", "owner", "target"});
    ConjectureSpec s;
    s.kind = r.text("kind");
    static const std::set<std::string> kinds{"affine", "polynomial", "neural", "quadratic", "quadratic_11"};
    if (!kinds.count(s.kind)) r.fail(r.at("kind"), "unknown conjecture kind '" + s.kind + "'");
    s.degree = r.count("degree", 2);
    s.width = r.count("width", 10);
    if (r.has("frozen")) s.frozen = r.flag("frozen", false);
    if (r.has("params")) s.params = r.reals("params");
    try {
      (void)s.build(0);
    } catch (const config_error& e) {
      r.fail(r.path(), e.what());
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "polynomial") j["degree"] = degree;
    if (kind == "neural") j["width"] = width;
    j["frozen"] = frozen.value_or(is_fixed_form());
    if (params) j["params"] = *params;
    return j;
  }
};

struct ConjectureOverride {
  std::size_t owner = 0;                // zero-based
  std::optional<std::size_t> target;    // zero-based leader, or the follower
  ConjectureSpec spec;
};

struct GameConfig {
  std::string name = "olsder";
  double k = -1.5;
  double lower = -2.0, upper = 2.0;  // leaders' dilemma box
  double cap = 400.0;                // olsder
  LinearQuadraticOptions lq;

  /// The game as played in `mode`. Olsder changes structure with the mode
  /// (two leaders, or leader 1 with player 2 as follower); the others do not.
  GameSpec build(PlayMode mode) const {
    if (name == "leaders_dilemma") return leaders_dilemma(k, ActionBox(lower, upper));
    if (name == "olsder") {
      OlsderOptions o;
      o.cap = cap;
      o.mode = mode == PlayMode::stackelberg ? OlsderMode::stackelberg : OlsderMode::simultaneous;
      return olsder_game(o);
    }
    if (name == "linear_quadratic") return linear_quadratic(lq);
    throw config_error("unknown game '" + name + "'");
  }

  static GameConfig from_json(const detail::ConfigReader& r) {
    GameConfig g;
    g.name = r.text("name");
    if (g.name == "leaders_dilemma") {
      r.only({"name", "K", "box"});
      g.k = r.real("K", -1.5);
      if (r.has("box")) {
        auto b = r.reals("box");
        if (b.size() != 2) r.fail(r.at("box"), "expected [lower, upper]");
        g.lower = b[0];
        g.upper = b[1];
      }
      if (!(g.k < -1.0)) r.fail(r.at("K"), "K must be < -1");
    } else if (g.name == "olsder") {
      r.only({"name", "cap"});
      g.cap = r.real("cap", 400.0);
    } else if (g.name == "linear_quadratic") {
      r.only({"name", "a", "b", "c", "leader_sense", "leader_box", "q", "p", "r", "follower_box"});
      auto& o = g.lq;
      o.a = r.reals("a");
      o.c = r.reals("c");
      o.p = r.reals("p");
      const std::size_t n = o.a.size();
      if (n == 0) r.fail(r.at("a"), "at least one leader required");
      if (o.c.size() != n) r.fail(r.at("c"), "expected " + std::to_string(n) + " entries");
      if (o.p.size() != n) r.fail(r.at("p"), "expected " + std::to_string(n) + " entries");
      o.b.assign(n, std::vector<double>(n, 0.0));
      if (r.has("b")) {
        const auto& rows = r.raw("b");
        if (!rows.is_array() || rows.size() != n) r.fail(r.at("b"), "expected an " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
        for (std::size_t i = 0; i < n; ++i) {
          const std::string where = r.at("b") + "[" + std::to_string(i) + "]";
          if (!rows[i].is_array() || rows[i].size() != n) r.fail(where, "expected " + std::to_string(n) + " numbers");
          for (std::size_t j = 0; j < n; ++j) {
            if (!rows[i][j].is_number()) r.fail(where + "[" + std::to_string(j) + "]", "expected a number");
            o.b[i][j] = rows[i][j].get<double>();
          }
        }
      }
      const std::string sense = r.text("leader_sense", "minimize");
      if (sense != "minimize" && sense != "maximize") r.fail(r.at("leader_sense"), "expected minimize or maximize");
      o.leader_sense = sense == "minimize" ? Sense::minimize : Sense::maximize;
      auto box_of = [&](const char* key, ActionBox fallback) {
        if (!r.has(key)) return fallback;
        auto b = r.reals(key);
        if (b.size() != 2) r.fail(r.at(key), "expected [lower, upper]");
        try {
          return ActionBox(b[0], b[1]);
        } catch (const config_error& e) {
          r.fail(r.at(key), e.what());
        }
      };
      o.leader_box = box_of("leader_box", o.leader_box);
      o.follower_box = box_of("follower_box", o.follower_box);
      o.q = r.real("q", o.q);
      o.r = r.real("r", o.r);
    } else {
      r.fail(r.at("name"), "unknown game '" + g.name + "' (expected leaders_dilemma, olsder or linear_quadratic)");
    }
    try {
      (void)g.build(PlayMode::stackelberg);
    } catch (const config_error& e) {
      r.fail(r.path(), e.what());
    }
    return g;
  }

  nlohmann::json to_json() const {
    if (name == "leaders_dilemma") return {{"name", name}, {"K", k}, {"box", {lower, upper}}};
    if (name == "olsder") return {{"name", name}, {"cap", cap}};
    return {{"name", name},
            {"a", lq.a},
            {"b", lq.b},
            {"c", lq.c},
            {"leader_sense", lq.leader_sense == Sense::minimize ? "minimize" : "maximize"},
            {"leader_box", {lq.leader_box.lower(), lq.leader_box.upper()}},
            {"q", lq.q},
            {"p", lq.p},
            {"r", lq.r},
            {"follower_box", {lq.follower_box.lower(), lq.follower_box.upper()}}};
  }
};

enum class Algorithm { costal, gd };

/// One labelled run with its effective training and play settings.
struct RunSpec {
  std::string label;
  Algorithm algorithm = Algorithm::costal;
  PlayMode mode = PlayMode::stackelberg;
  std::optional<ConjectureSpec> peers;
  std::optional<ConjectureSpec> follower;
  std::vector<ConjectureOverride> overrides;
  TrainConfig train;
  PlayConfig play;
  std::vector<double> x0;
  double y0 = 0.0;
};

struct AnalysisConfig {
  AnalysisTolerances tolerances;
  std::size_t lipschitz_samples = 2000;
  std::optional<double> m1;
  std::optional<double> m2;
};

struct ExperimentConfig {
  int schema_version = config_schema_version;
  std::string experiment = "experiment";
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  GameConfig game;
  PlayMode mode = PlayMode::stackelberg;
  nlohmann::json train = nlohmann::json::object();  // shared defaults, as written
  nlohmann::json play = nlohmann::json::object();
  std::vector<nlohmann::json> run_documents;  // per-run objects, as written
  std::vector<RunSpec> runs;
  AnalysisConfig analysis;

  const RunSpec& run(const std::string& label) const {
    for (const auto& r : runs) {
      if (r.label == label) return r;
    }
    throw config_error("no run labelled '" + label + "' in experiment " + experiment);
  }
};

inline const char* mode_name(PlayMode m) { return m == PlayMode::stackelberg ? "stackelberg" : "simultaneous"; }
inline const char* algorithm_name(Algorithm a) { return a == Algorithm::costal ? "costal" : "gd"; }

/// Per-run seed: the experiment seed mixed with a hash of the label, so a
/// run's results do not depend on which other runs are selected.
inline std::uint64_t run_seed(std::uint64_t base, const std::string& label) { return base ^ detail::fnv1a(label); }

namespace detail {

inline PlayMode parse_mode(const ConfigReader& r, const std::string& key, PlayMode fallback) {
  if (!r.has(key)) return fallback;
  const std::string m = r.text(key);
  if (m == "stackelberg") return PlayMode::stackelberg;
  if (m == "simultaneous") return PlayMode::simultaneous;
  r.fail(r.at(key), "expected stackelberg or simultaneous, got '" + m + "'");
}

inline TrainConfig parse_train(const ConfigReader& r) {
  r.only({"samples", "sigma", "batch_size", "epochs", "learning_rate", "standardize"});
  TrainConfig t;
  t.samples = r.count("samples", t.samples);
  t.sigma = r.maybe_real("sigma");
  t.batch_size = r.count("batch_size", t.batch_size);
  t.epochs = r.count("epochs", t.epochs);
  t.learning_rate = r.maybe_real("learning_rate");
  t.standardize = r.flag("standardize", t.standardize);
  if (t.sigma && *t.sigma < 0) r.fail(r.at("sigma"), "must be >= 0");
  if (t.learning_rate && !(*t.learning_rate > 0)) r.fail(r.at("learning_rate"), "must be positive");
  if (t.batch_size > t.samples) {
    r.fail(r.at("batch_size"), "batch_size (" + std::to_string(t.batch_size) + ") exceeds samples (" +
                                   std::to_string(t.samples) + ")");
  }
  return t;
}

inline nlohmann::json train_to_json(const TrainConfig& t) {
  return {{"samples", t.samples},         {"sigma", optional_json(t.sigma)},
          {"batch_size", t.batch_size},   {"epochs", t.epochs},
          {"learning_rate", optional_json(t.learning_rate)}, {"standardize", t.standardize}};
}

inline StepSchedule parse_schedule(const ConfigReader& r) {
  const std::string kind = r.text("kind");
  try {
    if (kind == "constant") {
      r.only({"kind", "eta"});
      return StepSchedule::constant(r.real("eta"));
    }
    if (kind == "robbins_monro") {
      r.only({"kind", "eta0", "alpha"});
      return StepSchedule::robbins_monro(r.real("eta0"), r.real("alpha", 0.6));
    }
  } catch (const config_error& e) {
    const std::string msg = e.what();
    if (msg.rfind("$", 0) == 0) throw;
    r.fail(r.path(), msg);
  }
  r.fail(r.at("kind"), "expected constant or robbins_monro, got '" + kind + "'");
}

inline nlohmann::json schedule_to_json(const StepSchedule& s) {
  if (s.kind() == StepSchedule::Kind::constant) return {{"kind", "constant"}, {"eta", s.eta0()}};
  return {{"kind", "robbins_monro"}, {"eta0", s.eta0()}, {"alpha", s.alpha()}};
}

struct PlaySettings {
  PlayConfig config;
  std::vector<double> x0;
  double y0 = 0.0;
};

inline PlaySettings parse_play(const ConfigReader& r) {
  r.only({"iterations", "schedule", "gradient_noise_std", "stop_tolerance", "parallel", "divergence_limit", "x0", "y0"});
  PlaySettings s;
  auto& c = s.config;
  c.iterations = r.count("iterations", c.iterations);
  if (r.has("schedule")) c.schedule = parse_schedule(r.child("schedule"));
  c.gradient_noise_std = r.real("gradient_noise_std", 0.0);
  if (c.gradient_noise_std < 0) r.fail(r.at("gradient_noise_std"), "must be >= 0");
  c.stop_tolerance = r.real("stop_tolerance", 0.0);
  if (c.stop_tolerance < 0) r.fail(r.at("stop_tolerance"), "must be >= 0");
  c.parallel = r.flag("parallel", false);
  c.divergence_limit = r.real("divergence_limit", c.divergence_limit);
  if (!(c.divergence_limit > 0)) r.fail(r.at("divergence_limit"), "must be positive");
  if (r.has("x0")) s.x0 = r.reals("x0");
  s.y0 = r.real("y0", 0.0);
  return s;
}

inline nlohmann::json play_to_json(const RunSpec& run) {
  const auto& c = run.play;
  return {{"iterations", c.iterations},
          {"schedule", schedule_to_json(c.schedule)},
          {"gradient_noise_std", c.gradient_noise_std},
          {"stop_tolerance", c.stop_tolerance},
          {"parallel", c.parallel},
          {"divergence_limit", c.divergence_limit},
          {"x0", run.x0},
          {"y0", run.y0}};
}

inline nlohmann::json merged(const nlohmann::json& base, const ConfigReader& run, const char* key) {
  nlohmann::json out = base;
  if (run.has(key)) {
    if (!run.raw(key).is_object()) run.fail(run.at(key), "expected an object");
    out.merge_patch(run.raw(key));
  }
  return out;
}

inline bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

inline RunSpec parse_run(const ConfigReader& r, const ExperimentConfig& cfg) {
  r.only({"label", "algorithm", "mode", "conjectures", "train", "play"});
  RunSpec run;
  run.label = r.text("label");
  if (!valid_label(run.label)) r.fail(r.at("label"), "labels use letters, digits, '_', '-' and '.' only");
  const std::string alg = r.text("algorithm", "costal");
  if (alg == "costal") {
    run.algorithm = Algorithm::costal;
  } else if (alg == "gd") {
    run.algorithm = Algorithm::gd;
  } else {
    r.fail(r.at("algorithm"), "expected costal or gd, got '" + alg + "'");
  }
  run.mode = parse_mode(r, "mode", cfg.mode);

  const nlohmann::json train_doc = merged(cfg.train, r, "train");
  run.train = parse_train(ConfigReader(train_doc, r.at("train")));
  const nlohmann::json play_doc = merged(cfg.play, r, "play");
  PlaySettings ps = parse_play(ConfigReader(play_doc, r.at("play")));
  run.play = ps.config;
  run.play.mode = run.mode;
  run.x0 = ps.x0;
  run.y0 = ps.y0;

  const GameSpec game = cfg.game.build(run.mode);
  const bool with_follower = game.has_follower() && run.mode == PlayMode::stackelberg;
  if (run.mode == PlayMode::stackelberg && !game.has_follower()) r.fail(r.at("mode"), "game has no follower for stackelberg play");
  if (run.x0.size() != game.leader_count()) {
    r.fail(r.at("play.x0"), "expected " + std::to_string(game.leader_count()) + " leader actions for " +
                                mode_name(run.mode) + " play, got " + std::to_string(run.x0.size()));
  }
  try {
    double y0 = run.y0;
    if (game.has_follower()) y0 = game.follower_box().project(y0);
    game.check_profile({run.x0, y0});
  } catch (const domain_error& e) {
    r.fail(r.at("play.x0"), e.what());
  }

  if (run.algorithm == Algorithm::costal) {
    if (!r.has("conjectures")) r.fail(r.at("conjectures"), "costal runs need conjecture specs");
    const ConfigReader c = r.child("conjectures");
    c.only({"peers", "follower", "overrides"});
    if (c.has("peers")) run.peers = ConjectureSpec::from_json(c.child("peers"));
    if (c.has("follower")) run.follower = ConjectureSpec::from_json(c.child("follower"));
    std::set<std::pair<std::size_t, std::size_t>> overridden;  // (owner, target or n for follower)
    if (c.has("overrides")) {
      const auto& list = c.raw("overrides");
      if (!list.is_array()) c.fail(c.at("overrides"), "expected an array");
      for (std::size_t k = 0; k < list.size(); ++k) {
        const ConfigReader o(list[k], c.at("overrides") + "[" + std::to_string(k) + "]");
        ConjectureOverride ov;
        const std::size_t owner = o.count("owner", 0);
        if (owner == 0 || owner > game.leader_count()) o.fail(o.at("owner"), "no such leader");
        ov.owner = owner - 1;
        if (!o.has("target")) o.fail(o.at("target"), "required (leader index or \"y\")");
        const auto& t = o.raw("target");
        if (t.is_string() && t.get<std::string>() == "y") {
          ov.target = std::nullopt;
        } else if (t.is_number_integer() && t.get<long long>() >= 1 &&
                   static_cast<std::size_t>(t.get<long long>()) <= game.leader_count() &&
                   static_cast<std::size_t>(t.get<long long>()) - 1 != ov.owner) {
          ov.target = static_cast<std::size_t>(t.get<long long>()) - 1;
        } else {
          o.fail(o.at("target"), "expected another leader's index or \"y\"");
        }
        ov.spec = ConjectureSpec::from_json(o);
        overridden.insert({ov.owner, ov.target.value_or(game.leader_count())});
        run.overrides.push_back(std::move(ov));
      }
    }
    for (std::size_t i = 0; i < game.leader_count(); ++i) {
      for (std::size_t j = 0; j < game.leader_count(); ++j) {
        if (j != i && !run.peers && !overridden.count({i, j})) {
          c.fail(c.at("peers"), "leader " + std::to_string(i + 1) + " needs a conjecture about leader " + std::to_string(j + 1));
        }
      }
      if (with_follower && !run.follower && !overridden.count({i, game.leader_count()})) {
        c.fail(c.at("follower"), "leader " + std::to_string(i + 1) + " needs a conjecture about the follower");
      }
    }
  } else if (r.has("conjectures")) {
    r.fail(r.at("conjectures"), "gd runs take no conjectures");
  }
  return run;
}

inline nlohmann::json run_to_json(const RunSpec& run) {
  nlohmann::json j{{"label", run.label}, {"algorithm", algorithm_name(run.algorithm)}, {"mode", mode_name(run.mode)}};
  if (run.algorithm == Algorithm::costal) {
    nlohmann::json c = nlohmann::json::object();
    if (run.peers) c["peers"] = run.peers->to_json();
    if (run.follower) c["follower"] = run.follower->to_json();
    if (!run.overrides.empty()) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& o : run.overrides) {
        nlohmann::json e = o.spec.to_json();
        e["owner"] = o.owner + 1;
        e["target"] = o.target ? nlohmann::json(*o.target + 1) : nlohmann::json("y");
        list.push_back(e);
      }
      c["overrides"] = list;
    }
    j["conjectures"] = c;
  }
  j["train"] = train_to_json(run.train);
  j["play"] = play_to_json(run);
  return j;
}

}  // namespace detail

/// Parses and validates an experiment document. Every failure names the
/// offending field as a JSON path.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
  const detail::ConfigReader r(doc, "$");
  r.only({"schema_version", "experiment", "seed", "output_dir", "game", "mode", "train", "play", "runs", "analysis"});
  ExperimentConfig cfg;
  if (!r.has("schema_version")) r.fail(r.at("schema_version"), "required");
  const auto& sv = r.raw("schema_version");
  if (!sv.is_number_integer() || sv.get<int>() != config_schema_version) {
    r.fail(r.at("schema_version"), "unsupported schema version (expected " + std::to_string(config_schema_version) + ")");
  }
  cfg.experiment = r.text("experiment", "experiment");
  cfg.seed = r.seed("seed", 0);
  cfg.output_dir = r.text("output_dir", "out/" + cfg.experiment);
  cfg.game = GameConfig::from_json(r.child("game"));
  cfg.mode = detail::parse_mode(r, "mode", PlayMode::stackelberg);
  if (r.has("train")) {
    cfg.train = r.raw("train");
    (void)detail::parse_train(r.child("train"));
  }
  if (r.has("play")) {
    cfg.play = r.raw("play");
    (void)detail::parse_play(r.child("play"));
  }
  if (r.has("analysis")) {
    const auto a = r.child("analysis");
    a.only({"stationarity_tolerance", "follower_tolerance", "consistency_tolerance", "beats_tolerance",
            "below_tolerance", "lipschitz_samples", "M1", "M2"});
    auto& t = cfg.analysis.tolerances;
    t.stationarity = a.real("stationarity_tolerance", t.stationarity);
    t.follower = a.real("follower_tolerance", t.follower);
    t.consistency = a.real("consistency_tolerance", t.consistency);
    t.beats = a.real("beats_tolerance", t.beats);
    t.below = a.real("below_tolerance", t.below);
    for (const char* k : {"stationarity_tolerance", "follower_tolerance", "consistency_tolerance", "beats_tolerance", "below_tolerance"}) {
      if (a.real(k, 0.0) < 0) a.fail(a.at(k), "must be >= 0");
    }
    cfg.analysis.lipschitz_samples = a.count("lipschitz_samples", cfg.analysis.lipschitz_samples, 0);
    cfg.analysis.m1 = a.maybe_real("M1");
    cfg.analysis.m2 = a.maybe_real("M2");
    if (cfg.analysis.m1 && *cfg.analysis.m1 <= 0) a.fail(a.at("M1"), "must be positive");
    if (cfg.analysis.m2 && *cfg.analysis.m2 < 0) a.fail(a.at("M2"), "must be >= 0");
  }
  if (!r.has("runs") || !r.raw("runs").is_array() || r.raw("runs").empty()) {
    r.fail(r.at("runs"), "expected a non-empty array of runs");
  }
  std::set<std::string> labels;
  const auto& runs = r.raw("runs");
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const detail::ConfigReader rr(runs[k], "$.runs[" + std::to_string(k) + "]");
    RunSpec run = detail::parse_run(rr, cfg);
    if (!labels.insert(run.label).second) rr.fail(rr.at("label"), "duplicate label '" + run.label + "'");
    cfg.run_documents.push_back(runs[k]);
    cfg.runs.push_back(std::move(run));
  }
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
  return experiment_config_from_json(io::parse_json(text, origin));
}

/// The effective configuration: every default resolved and every run spelled
/// out in full, so that it re-parses to the same values.
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : cfg.runs) runs.push_back(detail::run_to_json(r));
  const auto& t = cfg.analysis.tolerances;
  nlohmann::json analysis{{"stationarity_tolerance", t.stationarity},
                          {"follower_tolerance", t.follower},
                          {"consistency_tolerance", t.consistency},
                          {"beats_tolerance", t.beats},
                          {"below_tolerance", t.below},
                          {"lipschitz_samples", cfg.analysis.lipschitz_samples},
                          {"M1", detail::optional_json(cfg.analysis.m1)},
                          {"M2", detail::optional_json(cfg.analysis.m2)}};
  return {{"schema_version", cfg.schema_version},
          {"experiment", cfg.experiment},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir},
          {"game", cfg.game.to_json()},
          {"mode", mode_name(cfg.mode)},
          {"runs", runs},
          {"analysis", analysis}};
}

/// Keeps only the runs named in `labels` (in configuration order).
inline void select_runs(ExperimentConfig& cfg, const std::vector<std::string>& labels) {
  if (labels.empty()) return;
  for (const auto& l : labels) (void)cfg.run(l);
  std::vector<RunSpec> kept;
  std::vector<nlohmann::json> docs;
  for (std::size_t k = 0; k < cfg.runs.size(); ++k) {
    if (std::find(labels.begin(), labels.end(), cfg.runs[k].label) != labels.end()) {
      kept.push_back(cfg.runs[k]);
      docs.push_back(cfg.run_documents[k]);
    }
  }
  cfg.runs = std::move(kept);
  cfg.run_documents = std::move(docs);
}

/// Shipped configurations for the two reference experiments.
inline std::string builtin_config_text(const std::string& name) {
  if (name == "dilemma") {
    return R"({
  "schema_version": 1,
  "experiment": "dilemma",
  "seed": 0,
  "output_dir": "out/dilemma",
  "game": {"name": "leaders_dilemma", "K": -1.5, "box": [-2, 2]},
  "mode": "stackelberg",
  "train": {"samples": 2000, "batch_size": 32, "epochs": 200},
  "play": {"iterations": 10000, "schedule": {"kind": "constant", "eta": 0.01}, "x0": [0.5, 0.5]},
  "runs": [
    {"label": "GD", "algorithm": "gd"},
    {"label": "quadratic", "conjectures": {"peers": {"kind": "affine"}, "follower": {"kind": "quadratic"}}},
    {"label": "quadratic_11", "conjectures": {"peers": {"kind": "affine"}, "follower": {"kind": "quadratic_11"}}},
    {"label": "NN_5", "conjectures": {"peers": {"kind": "neural", "width": 5}, "follower": {"kind": "neural", "width": 5}},
     "train": {"epochs": 1000, "learning_rate": 0.03}},
    {"label": "NN_10", "conjectures": {"peers": {"kind": "neural", "width": 10}, "follower": {"kind": "neural", "width": 10}},
     "train": {"epochs": 1000, "learning_rate": 0.03}}
  ]
}
)";
  }
  if (name == "olsder") {
    return R"({
  "schema_version": 1,
  "experiment": "olsder",
  "seed": 0,
  "output_dir": "out/olsder",
  "game": {"name": "olsder", "cap": 400},
  "train": {"samples": 2000, "sigma": 0.5, "batch_size": 32, "epochs": 200},
  "play": {"iterations": 5000, "schedule": {"kind": "constant", "eta": 0.001}, "x0": [100, 50]},
  "runs": [
    {"label": "N_affine", "mode": "simultaneous", "conjectures": {"peers": {"kind": "affine"}}},
    {"label": "N_NN_5", "mode": "simultaneous", "conjectures": {"peers": {"kind": "neural", "width": 5}},
     "train": {"epochs": 1000, "learning_rate": 0.03}},
    {"label": "N_NN_10", "mode": "simultaneous", "conjectures": {"peers": {"kind": "neural", "width": 10}},
     "train": {"epochs": 1000, "learning_rate": 0.03}},
    {"label": "N_GD", "mode": "simultaneous", "algorithm": "gd"},
    {"label": "S_affine", "mode": "stackelberg", "conjectures": {"follower": {"kind": "affine"}}, "play": {"x0": [100]}},
    {"label": "S_NN_5", "mode": "stackelberg", "conjectures": {"follower": {"kind": "neural", "width": 5}},
     "train": {"epochs": 1000, "learning_rate": 0.03}, "play": {"x0": [100]}},
    {"label": "S_NN_10", "mode": "stackelberg", "conjectures": {"follower": {"kind": "neural", "width": 10}},
     "train": {"epochs": 1000, "learning_rate": 0.03}, "play": {"x0": [100]}},
    {"label": "S_GD", "mode": "stackelberg", "algorithm": "gd", "play": {"x0": [100]}}
  ]
}
)";
  }
  throw config_error("unknown experiment '" + name + "' (expected dilemma or olsder)");
}

inline ExperimentConfig builtin_config(const std::string& name) {
  return parse_experiment_config(builtin_config_text(name), "builtin:" + name);
}

// ---------------------------------------------------------------------------
// Pipelines

struct RunArtifacts {
  std::filesystem::path dir, samples, loss, conjectures, trace, summary;
};

inline RunArtifacts artifacts_for(const std::filesystem::path& out, const std::string& label) {
  RunArtifacts a;
  a.dir = out / label;
  a.samples = a.dir / ("samples_" + label + ".csv");
  a.loss = a.dir / ("loss_" + label + ".csv");
  a.conjectures = a.dir / "conjectures.json";
  a.trace = a.dir / ("trace_" + label + ".csv");
  a.summary = a.dir / "summary.json";
  return a;
}

inline GameSpec game_for(const ExperimentConfig& cfg, const RunSpec& run) { return cfg.game.build(run.mode); }

inline bool run_has_follower_conjectures(const GameSpec& game, const RunSpec& run) {
  return game.has_follower() && run.mode == PlayMode::stackelberg;
}

/// Untrained conjectures for a costal run; neural initializations draw from
/// the run seed mixed with the model's canonical index.
inline ConjectureSet initial_conjectures(const GameSpec& game, const RunSpec& run, std::uint64_t seed) {
  const std::size_t n = game.leader_count();
  const bool fol = run_has_follower_conjectures(game, run);
  auto spec_for = [&](std::size_t owner, std::optional<std::size_t> target) -> const ConjectureSpec& {
    for (const auto& o : run.overrides) {
      if (o.owner == owner && o.target == target) return o.spec;
    }
    const auto& s = target ? run.peers : run.follower;
    if (!s) throw config_error("run " + run.label + ": no conjecture spec for leader " + std::to_string(owner + 1));
    return *s;
  };
  ConjectureSet set;
  set.leaders.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto k = model_index(n, i, PlayerId::leader(j), fol);
      set.leaders[i].about.emplace(j, spec_for(i, j).build(seed ^ (0x9e3779b97f4a7c15ull * (k + 1))));
    }
    if (fol) {
      const auto k = model_index(n, i, PlayerId::follower(), fol);
      set.leaders[i].follower = spec_for(i, std::nullopt).build(seed ^ (0x9e3779b97f4a7c15ull * (k + 1)));
    }
  }
  return set;
}

inline bool all_frozen(const ConjectureSet& set) {
  for (const auto& l : set.leaders) {
    for (const auto& [j, m] : l.about) {
      if (!m.frozen()) return false;
    }
    if (l.follower && !l.follower->frozen()) return false;
  }
  return true;
}

/// Generates the datasets and fits the conjectures of one costal run,
/// writing samples, loss curves and the conjecture set.
inline TrainingResult train_run(const ExperimentConfig& cfg, const RunSpec& run, const std::filesystem::path& out) {
  if (run.algorithm != Algorithm::costal) throw config_error("run " + run.label + " does not use conjectures");
  const GameSpec game = game_for(cfg, run);
  const std::uint64_t seed = run_seed(cfg.seed, run.label);
  TrainConfig tc = run.train;
  tc.seed = seed;
  const auto sets = generate_samples(game, tc, run_has_follower_conjectures(game, run));
  TrainingResult result = train_conjectures(sets, initial_conjectures(game, run, seed), tc);
  const RunArtifacts a = artifacts_for(out, run.label);
  io::write_file_atomic(a.samples, samples_csv(sets));
  io::write_file_atomic(a.loss, loss_csv(result.curves));
  io::write_file_atomic(a.conjectures, serialize(result.conjectures));
  return result;
}

inline ConjectureSet load_conjectures(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw input_error("missing conjectures file " + path.string());
  return deserialize(io::read_file(path));
}

inline StrategyProfile initial_profile(const GameSpec& game, const RunSpec& run) {
  const double y0 = game.has_follower() ? game.follower_box().project(run.y0) : run.y0;
  return StrategyProfile{run.x0, y0};
}

/// Conjectures for playing a costal run: the given file, else the run's
/// trained set, else (when nothing needs training) the fixed forms.
inline ConjectureSet conjectures_for_play(const ExperimentConfig& cfg, const RunSpec& run, const std::filesystem::path& out,
                                          const std::optional<std::filesystem::path>& path) {
  if (path) return load_conjectures(*path);
  const RunArtifacts a = artifacts_for(out, run.label);
  if (std::filesystem::exists(a.conjectures)) return load_conjectures(a.conjectures);
  const GameSpec game = game_for(cfg, run);
  ConjectureSet init = initial_conjectures(game, run, run_seed(cfg.seed, run.label));
  if (all_frozen(init)) return init;
  throw input_error("missing conjectures file " + a.conjectures.string() + " for run " + run.label +
                    " (run the train command first)");
}

inline nlohmann::json summary_json(const RunSpec& run, const RunTrace& trace) {
  const auto& r = trace.final_row();
  return {{"label", run.label},
          {"algorithm", algorithm_name(run.algorithm)},
          {"mode", mode_name(run.mode)},
          {"iterations_run", r.t},
          {"stopped_early", trace.stopped_early},
          {"final",
           {{"x", r.leader_actions},
            {"y", r.follower_action ? nlohmann::json(*r.follower_action) : nlohmann::json(nullptr)},
            {"gradients", r.gradients},
            {"objectives", r.leader_objectives},
            {"follower_objective", r.follower_objective ? nlohmann::json(*r.follower_objective) : nlohmann::json(nullptr)}}}};
}

/// Plays one run (costal or gd) and writes its trace and summary.
inline RunTrace play_run(const ExperimentConfig& cfg, const RunSpec& run, const std::filesystem::path& out,
                         const std::optional<ConjectureSet>& conjectures = std::nullopt) {
  const GameSpec game = game_for(cfg, run);
  PlayConfig pc = run.play;
  pc.seed = run_seed(cfg.seed, run.label) ^ 0xd1b54a32d192ed03ull;
  pc.mode = run.mode;
  const StrategyProfile x0 = initial_profile(game, run);
  RunTrace trace;
  if (run.algorithm == Algorithm::gd) {
    trace = run_gd_baseline(game, pc, x0, run.label);
  } else {
    const ConjectureSet conj = conjectures ? *conjectures : conjectures_for_play(cfg, run, out, std::nullopt);
    trace = run_conjectural_dynamics(game, conj, pc, x0, run.label);
  }
  const RunArtifacts a = artifacts_for(out, run.label);
  io::write_file_atomic(a.trace, trace_csv(trace));
  io::write_file_atomic(a.summary, io::dump_json(summary_json(run, trace)));
  return trace;
}

inline ReferenceEquilibria references_for(const GameConfig& game) {
  if (game.name == "olsder") return olsder_reference();
  if (game.name == "leaders_dilemma") return dilemma_reference_points(game.k);
  ReferenceEquilibria none;
  none.game = game.name;
  return none;
}

/// Leader profile of the Stackelberg reference closest to a run's outcome,
/// when the game has one.
inline std::optional<std::vector<double>> stackelberg_reference(const GameConfig& game, const RunSpec& run,
                                                                const std::vector<double>& final_leaders) {
  if (game.name == "olsder") {
    const auto se = olsder::stackelberg();
    if (run.mode == PlayMode::stackelberg) return std::vector<double>{se.x1};
    return std::vector<double>{se.x1, se.x2};
  }
  if (game.name == "leaders_dilemma") {
    auto p = dilemma_reference(game.k).nearest_equilibrium(final_leaders[0], final_leaders[1]);
    return p;
  }
  return std::nullopt;
}

struct BoundRow {
  std::string label;
  std::vector<double> se_leaders;
  LipschitzEstimate constants;
  BoundCheck check;
};

struct AnalysisOutcome {
  std::vector<EquilibriumReport> reports;
  ComparisonTable comparison;
  std::vector<BoundRow> bounds;
};

inline std::string bound_csv(const std::vector<BoundRow>& rows) {
  std::string out = "label,leader,lhs,rhs,distance,M1,M2,holds\n";
  for (const auto& b : rows) {
    for (std::size_t i = 0; i < b.check.lhs.size(); ++i) {
      out += io::join({b.label, std::to_string(i + 1), io::format_real(b.check.lhs[i]), io::format_real(b.check.rhs),
                       io::format_real(b.check.distance), io::format_real(b.constants.m1),
                       io::format_real(b.constants.m2), b.check.lhs[i] <= b.check.rhs ? "1" : "0"}) +
             "\n";
    }
  }
  return out;
}

/// Certifies every trace against its run's conjectures (a gd run is read as
/// holding constant conjectures), compares final objectives with the
/// references, checks the objective bound, and writes the reports under
/// `out`.
inline AnalysisOutcome analyze_runs(const ExperimentConfig& cfg, const std::vector<RunTrace>& traces,
                                    const std::filesystem::path& out,
                                    const std::map<std::string, std::filesystem::path>& conjecture_paths = {}) {
  if (traces.empty()) throw input_error("nothing to analyze");
  AnalysisOutcome res;
  const ReferenceEquilibria refs = references_for(cfg.game);
  std::map<PlayMode, LipschitzEstimate> lipschitz;

  for (const auto& tr : traces) {
    const RunSpec& run = cfg.run(tr.label);
    const GameSpec game = game_for(cfg, run);
    if (tr.rows.empty()) throw input_error("trace '" + tr.label + "' is empty");
    const auto& last = tr.final_row();
    if (last.leader_actions.size() != game.leader_count()) {
      throw input_error("trace '" + tr.label + "' has " + std::to_string(last.leader_actions.size()) +
                        " leaders, its run expects " + std::to_string(game.leader_count()));
    }
    const StrategyProfile profile = tr.final_profile();
    ConjectureSet conj;
    if (run.algorithm == Algorithm::gd) {
      conj = constant_conjectures(game, profile);
    } else {
      auto it = conjecture_paths.find(run.label);
      conj = conjectures_for_play(cfg, run, out, it == conjecture_paths.end() ? std::nullopt
                                                                              : std::optional(it->second));
    }
    EquilibriumReport rep = equilibrium_report(game, conj, profile, run.mode, cfg.analysis.tolerances);
    rep.label = tr.label;
    rep.references = reference_distances(tr, refs);
    res.reports.push_back(std::move(rep));

    if (auto se = stackelberg_reference(cfg.game, run, last.leader_actions)) {
      auto it = lipschitz.find(run.mode);
      if (it == lipschitz.end()) {
        LipschitzEstimate est = estimate_lipschitz(game, {cfg.analysis.lipschitz_samples, cfg.seed, 1.1});
        if (cfg.analysis.m1) est.m1 = *cfg.analysis.m1;
        if (cfg.analysis.m2) est.m2 = *cfg.analysis.m2;
        it = lipschitz.emplace(run.mode, est).first;
      }
      BoundRow b{tr.label, *se, it->second, {}};
      b.check = bound_check(game, *se, last.leader_actions, it->second.m1, it->second.m2);
      res.bounds.push_back(std::move(b));
    }
  }
  res.comparison = compare_runs(traces, refs, cfg.analysis.tolerances);

  io::write_file_atomic(out / "references.csv", references_csv(refs));
  if (cfg.game.name == "leaders_dilemma") {
    io::write_file_atomic(out / "dilemma_reference.csv", dilemma_reference_csv(dilemma_reference(cfg.game.k)));
  }
  io::write_file_atomic(out / "comparison.csv", comparison_csv(res.comparison));
  io::write_file_atomic(out / "equilibrium_report.csv", report_csv(res.reports));
  io::write_file_atomic(out / "consistency_gaps.csv", gaps_csv(res.reports));
  io::write_file_atomic(out / "bound_check.csv", bound_csv(res.bounds));
  io::write_file_atomic(out / "report.txt", report_text(res.reports, &res.comparison));
  return res;
}

/// Writes the effective configuration and confirms it parses back to the
/// same document.
inline void echo_effective_config(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const nlohmann::json doc = to_json(cfg);
  const std::string text = io::dump_json(doc);
  const nlohmann::json again = to_json(parse_experiment_config(text, "effective config"));
  if (again != doc) throw config_error("effective configuration does not round-trip");
  io::write_file_atomic(out / "effective_config.json", text);
}

/// Train every costal run, play every run, then analyze them together.
inline AnalysisOutcome reproduce(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  echo_effective_config(cfg, out);
  std::vector<RunTrace> traces;
  for (const auto& run : cfg.runs) {
    std::optional<ConjectureSet> conj;
    if (run.algorithm == Algorithm::costal) conj = train_run(cfg, run, out).conjectures;
    traces.push_back(play_run(cfg, run, out, conj));
  }
  return analyze_runs(cfg, traces, out);
}

}  // namespace conjstack
