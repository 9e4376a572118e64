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
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "conjstack/errors.hpp"

namespace conjstack {

/// gamma(x) = slope * x + intercept. Parameter order: (slope, intercept).
struct Affine {
  double slope = 0.0;
  double intercept = 0.0;
};

/// gamma(x) = sum_g coefficients[g] * x^g. Parameter order: c_0..c_G.
struct Polynomial {
  std::vector<double> coefficients{0.0};
};

/// One hidden tanh layer:
///   gamma(x) = output_bias + sum_h output_weights[h] * tanh(input_weights[h] * x + input_biases[h]).
/// Parameter order: input_weights, input_biases, output_weights, output_bias.
struct NeuralNet {
  std::vector<double> input_weights;
  std::vector<double> input_biases;
  std::vector<double> output_weights;
  double output_bias = 0.0;

  std::size_t width() const noexcept { return input_weights.size(); }

  /// Seeded initialization: weights uniform in (-1/sqrt(H), 1/sqrt(H)), biases zero.
  static NeuralNet initialized(std::size_t width, std::uint64_t seed) {
    if (width == 0) throw config_error("neural conjecture needs a positive hidden width");
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    std::uniform_real_distribution<double> u(-bound, bound);
    NeuralNet net;
    net.input_weights.resize(width);
    net.output_weights.resize(width);
    for (auto& w : net.input_weights) w = u(rng);
    for (auto& w : net.output_weights) w = u(rng);
    net.input_biases.assign(width, 0.0);
    return net;
  }
};

/// A scalar-to-scalar conjecture: maps the owner's action to a prediction of
/// another player's action. Frozen models are skipped by the trainer.
class ConjectureModel {
 public:
  using Kind = std::variant<Affine, Polynomial, NeuralNet>;

  ConjectureModel() : kind_(Affine{}) {}
  ConjectureModel(Kind kind, bool frozen = false) : kind_(std::move(kind)), frozen_(frozen) { validate(); }

  const Kind& kind() const noexcept { return kind_; }
  bool frozen() const noexcept { return frozen_; }
  void set_frozen(bool f) noexcept { frozen_ = f; }

  /// "affine", "polynomial" or "neural".
  std::string kind_name() const {
    switch (kind_.index()) {
      case 0: return "affine";
      case 1: return "polynomial";
      default: return "neural";
    }
  }

  double predict(double x) const {
    return std::visit(
        [x](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Affine>) {
            return m.slope * x + m.intercept;
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            const auto& c = m.coefficients;
            double r = c.back();
            for (std::size_t g = c.size() - 1; g-- > 0;) r = r * x + c[g];
            return r;
          } else {
            double r = m.output_bias;
            for (std::size_t h = 0; h < m.width(); ++h) {
              r += m.output_weights[h] * std::tanh(m.input_weights[h] * x + m.input_biases[h]);
            }
            return r;
          }
        },
        kind_);
  }

  /// Exact d gamma / dx.
  double input_derivative(double x) const {
    return std::visit(
        [x](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Affine>) {
            return m.slope;
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            const auto& c = m.coefficients;
            const std::size_t deg = c.size() - 1;
            if (deg == 0) return 0.0;
            double r = static_cast<double>(deg) * c[deg];
            for (std::size_t g = deg - 1; g >= 1; --g) r = r * x + static_cast<double>(g) * c[g];
            return r;
          } else {
            double r = 0.0;
            for (std::size_t h = 0; h < m.width(); ++h) {
              const double t = std::tanh(m.input_weights[h] * x + m.input_biases[h]);
              r += m.output_weights[h] * m.input_weights[h] * (1.0 - t * t);
            }
            return r;
          }
        },
        kind_);
  }

  /// Gradient of 0.5 * residual^2 with respect to the parameters, where
  /// residual = target - predict(x); i.e. -residual * d predict / d theta.
  std::vector<double> parameter_gradient(double x, double residual) const {
    std::vector<double> g = prediction_sensitivity(x);
    for (double& v : g) v *= -residual;
    return g;
  }

  /// d predict / d theta, in parameter order.
  std::vector<double> prediction_sensitivity(double x) const {
    return std::visit(
        [x](const auto& m) -> std::vector<double> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Affine>) {
            return {x, 1.0};
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            std::vector<double> s(m.coefficients.size());
            double p = 1.0;
            for (double& v : s) {
              v = p;
              p *= x;
            }
            return s;
          } else {
            const std::size_t H = m.width();
            std::vector<double> s(3 * H + 1);
            for (std::size_t h = 0; h < H; ++h) {
              const double t = std::tanh(m.input_weights[h] * x + m.input_biases[h]);
              const double slope = m.output_weights[h] * (1.0 - t * t);
              s[h] = slope * x;
              s[H + h] = slope;
              s[2 * H + h] = t;
            }
            s[3 * H] = 1.0;
            return s;
          }
        },
        kind_);
  }

  std::size_t parameter_count() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Affine>) return 2;
          else if constexpr (std::is_same_v<T, Polynomial>) return m.coefficients.size();
          else return 3 * m.width() + 1;
        },
        kind_);
  }

  std::vector<double> parameters() const {
    return std::visit(
        [](const auto& m) -> std::vector<double> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Affine>) {
            return {m.slope, m.intercept};
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            return m.coefficients;
          } else {
            std::vector<double> v;
            v.reserve(3 * m.width() + 1);
            v.insert(v.end(), m.input_weights.begin(), m.input_weights.end());
            v.insert(v.end(), m.input_biases.begin(), m.input_biases.end());
            v.insert(v.end(), m.output_weights.begin(), m.output_weights.end());
            v.push_back(m.output_bias);
            return v;
          }
        },
        kind_);
  }

  void set_parameters(std::span<const double> theta) {
    if (theta.size() != parameter_count()) {
      throw config_error("parameter vector has " + std::to_string(theta.size()) + " entries, model expects " +
                         std::to_string(parameter_count()));
    }
    std::visit(
        [theta](auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Affine>) {
            m.slope = theta[0];
            m.intercept = theta[1];
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            m.coefficients.assign(theta.begin(), theta.end());
          } else {
            const std::size_t H = m.width();
            std::copy_n(theta.begin(), H, m.input_weights.begin());
            std::copy_n(theta.begin() + H, H, m.input_biases.begin());
            std::copy_n(theta.begin() + 2 * H, H, m.output_weights.begin());
            m.output_bias = theta[3 * H];
          }
        },
        kind_);
  }

 private:
  void validate() const {
    if (const auto* p = std::get_if<Polynomial>(&kind_); p && p->coefficients.empty()) {
      throw config_error("polynomial conjecture needs at least one coefficient");
    }
    if (const auto* n = std::get_if<NeuralNet>(&kind_)) {
      if (n->width() == 0 || n->input_biases.size() != n->width() || n->output_weights.size() != n->width()) {
        throw config_error("neural conjecture layers must all have the hidden width");
      }
    }
  }

  Kind kind_;
  bool frozen_ = false;
};

inline double predict(const ConjectureModel& m, double x) { return m.predict(x); }
inline double input_derivative(const ConjectureModel& m, double x) { return m.input_derivative(x); }
inline std::vector<double> parameter_gradient(const ConjectureModel& m, double x, double residual) {
  return m.parameter_gradient(x, residual);
}

/// The model x -> out_scale * m(in_scale * x + in_shift) + out_shift, in the
/// same family. Used to move models between raw and standardized units.
inline ConjectureModel compose_affine(const ConjectureModel& model, double in_scale, double in_shift,
                                      double out_scale, double out_shift) {
  ConjectureModel::Kind k = std::visit(
      [&](const auto& m) -> ConjectureModel::Kind {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return Affine{out_scale * m.slope * in_scale, out_scale * (m.slope * in_shift + m.intercept) + out_shift};
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          // Expand sum_g c_g (s x + t)^g in powers of x.
          const auto& c = m.coefficients;
          const std::size_t n = c.size();
          std::vector<double> out(n, 0.0);
          std::vector<double> binom(n, 0.0);  // row g of Pascal's triangle
          for (std::size_t g = 0; g < n; ++g) {
            for (std::size_t k = g; k > 0; --k) binom[k] += binom[k - 1];
            binom[0] = 1.0;
            for (std::size_t k = 0; k <= g; ++k) {
              out[k] += c[g] * binom[k] * std::pow(in_scale, static_cast<double>(k)) *
                        std::pow(in_shift, static_cast<double>(g - k));
            }
          }
          for (double& v : out) v *= out_scale;
          out[0] += out_shift;
          return Polynomial{out};
        } else {
          NeuralNet r = m;
          for (std::size_t h = 0; h < m.width(); ++h) {
            r.input_biases[h] = m.input_weights[h] * in_shift + m.input_biases[h];
            r.input_weights[h] = m.input_weights[h] * in_scale;
            r.output_weights[h] = out_scale * m.output_weights[h];
          }
          r.output_bias = out_scale * m.output_bias + out_shift;
          return r;
        }
      },
      model.kind());
  return ConjectureModel(std::move(k), model.frozen());
}

}  // namespace conjstack
