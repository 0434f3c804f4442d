#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csipos/numerics/network.hpp"

namespace csipos::numerics {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per element.
inline Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                         double eps) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps entries whose true
/// gradient is ~0 from dominating through finite-difference noise.
inline double relative_error(double a, double b, double floor = 1e-6) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

struct GradCheckResult {
  std::string label;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backprop against central differences for every parameter and
/// every input element of model under the MSE loss. Dropout stays off.
inline GradCheckResult check_model_gradients(Model& model, const Tensor& input, const Tensor& target,
                                             double eps = 1e-5) {
  GradCheckResult result;
  Gradients grads = model.make_gradients();
  const Trace trace = model.forward(input);
  const Tensor& pred = trace.activations.back();
  const Tensor input_grad = model.backward(trace, mse_loss_grad(pred, target), grads);

  auto loss_at = [&](const Model& m, const Tensor& x) { return mse_loss(m.predict(x), target); };

  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    for (std::size_t j = 0; j < model.layers()[i].params.size(); ++j) {
      Tensor& p = model.layers()[i].params[j];
      const Tensor original = p;
      const Tensor numeric = finite_difference_gradient(
          [&](const Tensor& value) {
            p = value;
            return loss_at(model, input);
          },
          original, eps);
      p = original;
      for (std::size_t k = 0; k < numeric.size(); ++k) {
        result.max_relative_error =
            std::max(result.max_relative_error, relative_error(numeric[k], grads.per_layer[i][j][k]));
        ++result.checked;
      }
    }
  }
  const Tensor numeric_in =
      finite_difference_gradient([&](const Tensor& x) { return loss_at(model, x); }, input, eps);
  for (std::size_t k = 0; k < numeric_in.size(); ++k) {
    result.max_relative_error = std::max(result.max_relative_error, relative_error(numeric_in[k], input_grad[k]));
    ++result.checked;
  }
  return result;
}

namespace detail {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

inline void randomize_params(Model& model, Rng& rng) {
  for (auto& layer : model.layers())
    for (auto& p : layer.params)
      for (double& v : p.storage()) v = rng.uniform(-0.8, 0.8);
}

/// Small random net exercising one layer kind, ending in a dense layer of width 2.
inline Model gradcheck_net(LayerKind kind, Rng& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };
  const std::size_t rows = pick(2, 6), cols = pick(2, 6), ch = pick(1, 3);
  Model m({rows, cols, ch});
  switch (kind) {
    case LayerKind::conv2d: {
      const Extent2 k{pick(1, std::min<std::size_t>(rows, 3)), pick(1, std::min<std::size_t>(cols, 3))};
      const Extent2 s{pick(1, 2), pick(1, 2)};
      const Padding pad = rng.below(2) ? Padding::same : Padding::valid;
      m.add(LayerSpec::conv(k, ch, pick(1, 3), s, pad));
      break;
    }
    case LayerKind::relu:
      m.add(LayerSpec::conv({1, 1}, ch, 2));
      m.add(LayerSpec::relu());
      break;
    case LayerKind::dropout:
      m.add(LayerSpec::dropout(0.3));
      break;
    case LayerKind::residual_add:
      m.add(LayerSpec::conv({1, 3}, ch, ch));
      m.add(LayerSpec::relu());
      m.add(LayerSpec::residual(-1));
      m.add(LayerSpec::conv({3, 1}, ch, ch));
      m.add(LayerSpec::residual(2));
      break;
    case LayerKind::flatten:
    case LayerKind::dense:
      break;
  }
  m.add(LayerSpec::flatten());
  const std::size_t flat = m.output_shape()[0];
  if (kind == LayerKind::dense) {
    const std::size_t hidden = pick(1, 6);
    m.add(LayerSpec::dense(flat, hidden));
    m.add(LayerSpec::dense(hidden, 2));
  } else {
    m.add(LayerSpec::dense(flat, 2));
  }
  randomize_params(m, rng);
  return m;
}

}  // namespace detail

/// The standing gradient-check suite: every layer kind on `instances`
/// seeded random networks with extents <= 8.
inline std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, int instances = 5) {
  std::vector<GradCheckResult> results;
  const LayerKind kinds[] = {LayerKind::conv2d, LayerKind::dense, LayerKind::relu,
                             LayerKind::dropout, LayerKind::residual_add, LayerKind::flatten};
  for (LayerKind kind : kinds) {
    for (int s = 0; s < instances; ++s) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(kind) * 1000 + static_cast<std::uint64_t>(s)));
      Model m = detail::gradcheck_net(kind, rng);
      const Tensor x = detail::random_tensor(m.input_shape(), rng);
      const Tensor t = detail::random_tensor({2}, rng);
      GradCheckResult r = check_model_gradients(m, x, t);
      r.label = std::string(to_string(kind)) + "#" + std::to_string(s);
      results.push_back(r);
    }
  }
  return results;
}

}  // namespace csipos::numerics
