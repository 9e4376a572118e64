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

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "conjstack/conjecture.hpp"
#include "conjstack/errors.hpp"
#include "conjstack/io.hpp"

namespace conjstack {

/// Leader i's conjectures: one model per peer leader j (keyed by zero-based
/// index) and, in Stackelberg play, one model for the follower.
struct LeaderConjectures {
  std::map<std::size_t, ConjectureModel> about;
  std::optional<ConjectureModel> follower;
};

struct ConjectureSet {
  std::vector<LeaderConjectures> leaders;

  const ConjectureModel& about(std::size_t owner, std::size_t target) const {
    const auto& m = leaders.at(owner).about;
    auto it = m.find(target);
    if (it == m.end()) {
      throw config_error("missing conjecture of leader " + std::to_string(owner + 1) + " about leader " +
                         std::to_string(target + 1));
    }
    return it->second;
  }

  const ConjectureModel& about_follower(std::size_t owner) const {
    const auto& f = leaders.at(owner).follower;
    if (!f) throw config_error("missing follower conjecture of leader " + std::to_string(owner + 1));
    return *f;
  }

  /// Requires N(N-1) peer conjectures and, when `with_follower`, N follower
  /// conjectures.
  void validate(std::size_t leader_count, bool with_follower) const {
    if (leaders.size() != leader_count) {
      throw config_error("conjecture set covers " + std::to_string(leaders.size()) + " leaders, game has " +
                         std::to_string(leader_count));
    }
    for (std::size_t i = 0; i < leader_count; ++i) {
      for (std::size_t j = 0; j < leader_count; ++j) {
        if (j != i) (void)about(i, j);
      }
      if (leaders[i].about.size() != leader_count - 1) {
        throw config_error("leader " + std::to_string(i + 1) + " has conjectures about unknown players");
      }
      if (with_follower) (void)about_follower(i);
    }
  }
};

namespace detail {

inline nlohmann::json model_to_json(const ConjectureModel& m) {
  nlohmann::json j;
  j["kind"] = m.kind_name();
  j["frozen"] = m.frozen();
  nlohmann::json params;
  if (const auto* a = std::get_if<Affine>(&m.kind())) {
    params["a"] = a->slope;
    params["b"] = a->intercept;
  } else if (const auto* p = std::get_if<Polynomial>(&m.kind())) {
    params["coefficients"] = p->coefficients;
  } else {
    const auto& n = std::get<NeuralNet>(m.kind());
    params["width"] = n.width();
    params["w1"] = n.input_weights;
    params["b1"] = n.input_biases;
    params["w2"] = n.output_weights;
    params["b2"] = n.output_bias;
  }
  j["params"] = params;
  return j;
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw parse_error(path + ": missing '" + key + "'");
  return j.at(key);
}

inline double require_real(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number()) throw parse_error(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::vector<double> require_reals(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_array()) throw parse_error(path + "." + key + ": expected an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) throw parse_error(path + "." + key + "[" + std::to_string(k) + "]: expected a number");
    out.push_back(v[k].get<double>());
  }
  return out;
}

inline ConjectureModel model_from_json(const nlohmann::json& j, const std::string& path) {
  const auto& kind = require(j, "kind", path);
  if (!kind.is_string()) throw parse_error(path + ".kind: expected a string");
  const auto& params = require(j, "params", path);
  const std::string ppath = path + ".params";
  bool frozen = false;
  if (j.contains("frozen")) {
    if (!j["frozen"].is_boolean()) throw parse_error(path + ".frozen: expected a boolean");
    frozen = j["frozen"].get<bool>();
  }
  const std::string k = kind.get<std::string>();
  if (k == "affine") {
    return ConjectureModel(Affine{require_real(params, "a", ppath), require_real(params, "b", ppath)}, frozen);
  }
  if (k == "polynomial") {
    auto c = require_reals(params, "coefficients", ppath);
    if (c.empty()) throw parse_error(ppath + ".coefficients: must not be empty");
    return ConjectureModel(Polynomial{std::move(c)}, frozen);
  }
  if (k == "neural") {
    const auto& w = require(params, "width", ppath);
    if (!w.is_number_unsigned() || w.get<std::size_t>() == 0) {
      throw parse_error(ppath + ".width: expected a positive integer");
    }
    const std::size_t width = w.get<std::size_t>();
    NeuralNet n;
    n.input_weights = require_reals(params, "w1", ppath);
    n.input_biases = require_reals(params, "b1", ppath);
    n.output_weights = require_reals(params, "w2", ppath);
    n.output_bias = require_real(params, "b2", ppath);
    const std::pair<const char*, std::size_t> sizes[] = {
        {"w1", n.input_weights.size()}, {"b1", n.input_biases.size()}, {"w2", n.output_weights.size()}};
    for (const auto& [name, size] : sizes) {
      if (size != width) {
        throw parse_error(ppath + "." + name + ": expected " + std::to_string(width) + " entries, got " +
                          std::to_string(size));
      }
    }
    return ConjectureModel(std::move(n), frozen);
  }
  throw parse_error(path + ".kind: unknown conjecture kind '" + k + "'");
}

}  // namespace detail

/// {"leaders":[{"about":[{"target":j,"kind":..,"params":{..}},..],"follower":{..}},..]}
/// with 1-based targets and 17-significant-digit numbers.
inline nlohmann::json to_json(const ConjectureSet& set) {
  nlohmann::json leaders = nlohmann::json::array();
  for (const auto& lc : set.leaders) {
    nlohmann::json about = nlohmann::json::array();
    for (const auto& [target, model] : lc.about) {
      nlohmann::json e = detail::model_to_json(model);
      e["target"] = target + 1;
      about.push_back(std::move(e));
    }
    nlohmann::json entry;
    entry["about"] = std::move(about);
    entry["follower"] = lc.follower ? detail::model_to_json(*lc.follower) : nlohmann::json(nullptr);
    leaders.push_back(std::move(entry));
  }
  return nlohmann::json{{"leaders", std::move(leaders)}};
}

inline std::string serialize(const ConjectureSet& set) { return io::dump_json(to_json(set)); }

inline ConjectureSet conjecture_set_from_json(const nlohmann::json& doc) {
  ConjectureSet set;
  const auto& leaders = detail::require(doc, "leaders", "$");
  if (!leaders.is_array()) throw parse_error("$.leaders: expected an array");
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    const std::string path = "$.leaders[" + std::to_string(i) + "]";
    LeaderConjectures lc;
    const auto& about = detail::require(leaders[i], "about", path);
    if (!about.is_array()) throw parse_error(path + ".about: expected an array");
    for (std::size_t k = 0; k < about.size(); ++k) {
      const std::string apath = path + ".about[" + std::to_string(k) + "]";
      const auto& t = detail::require(about[k], "target", apath);
      if (!t.is_number_unsigned() || t.get<std::size_t>() == 0 || t.get<std::size_t>() > leaders.size() ||
          t.get<std::size_t>() == i + 1) {
        throw parse_error(apath + ".target: expected a peer leader index in 1.." + std::to_string(leaders.size()));
      }
      const std::size_t target = t.get<std::size_t>() - 1;
      if (lc.about.count(target)) throw parse_error(apath + ".target: duplicate target");
      lc.about.emplace(target, detail::model_from_json(about[k], apath));
    }
    if (leaders[i].contains("follower") && !leaders[i]["follower"].is_null()) {
      lc.follower = detail::model_from_json(leaders[i]["follower"], path + ".follower");
    }
    set.leaders.push_back(std::move(lc));
  }
  return set;
}

inline ConjectureSet deserialize(const std::string& text) {
  return conjecture_set_from_json(io::parse_json(text, "conjecture set"));
}

}  // namespace conjstack
