#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "csipos/numerics/network.hpp"

namespace csipos::numerics {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  /// Indexed like Model::layers()[i].params[j].
  std::vector<std::vector<std::vector<double>>> first_moment;
  std::vector<std::vector<std::vector<double>>> second_moment;

  static AdamState for_model(const Model& model, AdamConfig config = {}) {
    if (!(config.lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
      throw ConfigError("adam: beta1 and beta2 must lie in [0, 1)");
    }
    if (!(config.epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
    AdamState s;
    s.config = config;
    for (const auto& layer : model.layers()) {
      auto& m = s.first_moment.emplace_back();
      auto& v = s.second_moment.emplace_back();
      for (const auto& p : layer.params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
      }
    }
    return s;
  }
};

/// Bias-corrected Adam step over every parameter of a non-frozen layer.
/// Frozen layers are skipped entirely: values and moments stay untouched.
inline void adam_update(Model& model, const Gradients& grads, AdamState& state) {
  const AdamConfig& c = state.config;
  if (!(c.lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");
  auto& layers = model.layers();
  if (grads.per_layer.size() != layers.size() || state.first_moment.size() != layers.size()) {
    throw ShapeError("adam: gradient/state layout does not match the model");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].spec.frozen) continue;
    for (std::size_t j = 0; j < layers[i].params.size(); ++j) {
      auto& p = layers[i].params[j].storage();
      const auto& g = grads.per_layer[i][j].storage();
      auto& m = state.first_moment[i][j];
      auto& v = state.second_moment[i][j];
      if (g.size() != p.size() || m.size() != p.size()) {
        throw ShapeError("adam: shape mismatch in layer " + std::to_string(i));
      }
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
        v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
        const double m_hat = m[k] / correction1;
        const double v_hat = v[k] / correction2;
        p[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
      }
    }
  }
}

}  // namespace csipos::numerics
