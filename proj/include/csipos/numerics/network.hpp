#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "csipos/numerics/ops.hpp"
#include "csipos/numerics/rng.hpp"
#include "csipos/numerics/tensor.hpp"

namespace csipos::numerics {

enum class LayerKind { conv2d, dense, relu, dropout, residual_add, flatten };

inline const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::dropout: return "dropout";
    case LayerKind::residual_add: return "residual_add";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

/// One node of the layered graph. Unused fields are ignored for a given kind:
/// conv2d uses kernel/channels/stride/padding, dense uses in/out channels as
/// feature counts, dropout uses dropout_rate, residual_add uses skip_from.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  Extent2 kernel{1, 1};
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Extent2 stride{1, 1};
  Padding padding = Padding::same;
  double dropout_rate = 0.0;
  bool frozen = false;
  /// Index of the layer whose output is added; -1 is the model input.
  int skip_from = -1;
  std::string name;

  static LayerSpec conv(Extent2 kernel, std::size_t in_ch, std::size_t out_ch, Extent2 stride = {1, 1},
                        Padding padding = Padding::same) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.kernel = kernel;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.stride = stride;
    s.padding = padding;
    return s;
  }
  static LayerSpec dense(std::size_t in_features, std::size_t out_features) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in_channels = in_features;
    s.out_channels = out_features;
    return s;
  }
  static LayerSpec relu() { return LayerSpec{}; }
  static LayerSpec dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::dropout;
    s.dropout_rate = rate;
    return s;
  }
  static LayerSpec residual(int skip_from) {
    LayerSpec s;
    s.kind = LayerKind::residual_add;
    s.skip_from = skip_from;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }

  bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
};

struct Layer {
  LayerSpec spec;
  Shape in_shape;
  Shape out_shape;
  /// conv2d: {kernels [kh,kw,cin,cout], bias [cout]}; dense: {weights [in,out], bias [out]}.
  std::vector<Tensor> params;

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.size();
    return n;
  }
};

/// Per-parameter gradients, laid out like Model::layers()[i].params.
struct Gradients {
  std::vector<std::vector<Tensor>> per_layer;
  std::vector<bool> frozen;

  void zero() {
    for (auto& layer : per_layer)
      for (auto& g : layer) g.fill(0.0);
  }
  void scale(double s) {
    for (auto& layer : per_layer)
      for (auto& g : layer)
        for (double& v : g.storage()) v *= s;
  }
};

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;  // required when training with active dropout
};

/// Everything backward() needs from a forward pass.
struct Trace {
  std::vector<Tensor> activations;  // [0] is the input, [i + 1] the output of layer i
  std::vector<Tensor> dropout_masks;  // per layer; empty unless a training-mode dropout ran
};

struct BackwardOptions {
  /// Leave gradients of frozen layers at zero and stop at the first trainable layer.
  bool skip_frozen = false;
  /// Also produce dL/d(input).
  bool input_gradient = true;
};

class Model {
 public:
  Model() = default;
  explicit Model(Shape input_shape) : input_shape_(std::move(input_shape)) {}

  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept {
    return layers_.empty() ? input_shape_ : layers_.back().out_shape;
  }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  std::size_t size() const noexcept { return layers_.size(); }

  /// Layers [begin, end) as a model of their own, parameters copied. A skip
  /// reading the output of layer begin-1 becomes a skip from the new input;
  /// anything reading further back cannot be sliced.
  Model slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > layers_.size()) throw UsageError("slice: bad layer range");
    Model m(begin == 0 ? input_shape_ : layers_[begin - 1].out_shape);
    const int b = static_cast<int>(begin);
    for (std::size_t i = begin; i < end; ++i) {
      LayerSpec spec = layers_[i].spec;
      if (spec.kind == LayerKind::residual_add) {
        if (spec.skip_from < b - 1) {
          throw ShapeError("slice: layer " + std::to_string(i) + " reads from before layer " + std::to_string(begin));
        }
        spec.skip_from -= b;
      }
      m.add(spec);
      m.layers_.back().params = layers_[i].params;
    }
    return m;
  }

  /// Appends a layer, inferring its shapes and allocating zeroed parameters.
  void add(LayerSpec spec) {
    const int index = static_cast<int>(layers_.size());
    const Shape in = output_shape();
    const std::string where = "layer " + std::to_string(index) + " (" + to_string(spec.kind) +
                              (spec.name.empty() ? "" : " '" + spec.name + "'") + ")";
    Layer layer;
    layer.in_shape = in;
    try {
      switch (spec.kind) {
        case LayerKind::conv2d: {
          if (in.size() != 3) throw ShapeError("expects a rank-3 input, got " + shape_string(in));
          if (spec.in_channels != in[2]) {
            throw ShapeError("declares " + std::to_string(spec.in_channels) +
                             " input channels but receives " + std::to_string(in[2]));
          }
          Shape kshape{spec.kernel.rows, spec.kernel.cols, spec.in_channels, spec.out_channels};
          if (spec.out_channels == 0) throw ShapeError("needs at least one output channel");
          const ConvGeometry g = conv_geometry(in, kshape, spec.stride, spec.padding);
          layer.out_shape = {g.rows.out, g.cols.out, spec.out_channels};
          layer.params = {Tensor(kshape), Tensor({spec.out_channels})};
          break;
        }
        case LayerKind::dense: {
          if (in.size() != 1) throw ShapeError("expects a flat input, got " + shape_string(in));
          if (spec.in_channels != in[0]) {
            throw ShapeError("declares " + std::to_string(spec.in_channels) +
                             " input features but receives " + std::to_string(in[0]));
          }
          if (spec.out_channels == 0) throw ShapeError("needs at least one output feature");
          layer.out_shape = {spec.out_channels};
          layer.params = {Tensor({spec.in_channels, spec.out_channels}), Tensor({spec.out_channels})};
          break;
        }
        case LayerKind::relu:
          layer.out_shape = in;
          break;
        case LayerKind::dropout:
          if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) {
            throw ShapeError("dropout rate must lie in [0, 1)");
          }
          layer.out_shape = in;
          break;
        case LayerKind::residual_add: {
          if (spec.skip_from < -1 || spec.skip_from >= index) {
            throw ShapeError("skip source " + std::to_string(spec.skip_from) + " is not a prior layer");
          }
          const Shape& src = spec.skip_from < 0 ? input_shape_ : layers_[static_cast<std::size_t>(spec.skip_from)].out_shape;
          if (src != in) {
            throw ShapeError("skip source shape " + shape_string(src) + " differs from " + shape_string(in));
          }
          layer.out_shape = in;
          break;
        }
        case LayerKind::flatten:
          layer.out_shape = {shape_size(in)};
          break;
      }
    } catch (const ShapeError& e) {
      throw ShapeError(where + ": " + e.what());
    }
    layer.spec = std::move(spec);
    layers_.push_back(std::move(layer));
  }

  /// He-uniform kernels for conv layers, Glorot-uniform weights for dense
  /// layers, zero biases; one generator walks the layers in order.
  /// He-uniform for convolutions, Glorot-uniform for dense layers, both
  /// multiplied by `gain`; zero biases.
  void initialize(std::uint64_t seed, double gain = 1.0) {
    Rng rng(seed);
    for (auto& layer : layers_) {
      if (!layer.spec.has_params()) continue;
      Tensor& w = layer.params[0];
      double limit;
      if (layer.spec.kind == LayerKind::conv2d) {
        const double fan_in = static_cast<double>(w.extent(0) * w.extent(1) * w.extent(2));
        limit = std::sqrt(6.0 / fan_in);
      } else {
        limit = std::sqrt(6.0 / static_cast<double>(w.extent(0) + w.extent(1)));
      }
      limit *= gain;
      for (double& v : w.storage()) v = rng.uniform(-limit, limit);
      layer.params[1].fill(0.0);
    }
  }

  Trace forward(const Tensor& input, const ForwardOptions& opts = {}) const {
    check_input(input);
    Trace trace;
    trace.activations.reserve(layers_.size() + 1);
    trace.activations.push_back(input);
    trace.dropout_masks.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      trace.activations.push_back(apply(i, trace.activations, opts, &trace.dropout_masks[i]));
    }
    return trace;
  }

  /// Inference-mode forward pass; dropout is the identity.
  Tensor predict(const Tensor& input) const {
    check_input(input);
    std::vector<Tensor> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(input);
    for (std::size_t i = 0; i < layers_.size(); ++i) acts.push_back(apply(i, acts, {}, nullptr));
    return std::move(acts.back());
  }

  Gradients make_gradients() const {
    Gradients g;
    g.per_layer.resize(layers_.size());
    g.frozen.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      for (const auto& p : layers_[i].params) g.per_layer[i].emplace_back(p.shape());
      g.frozen[i] = layers_[i].spec.frozen;
    }
    return g;
  }

  /// Accumulates dL/dθ into grads given dL/d(output). Returns dL/d(input),
  /// or an empty tensor when the options say it is not needed.
  Tensor backward(const Trace& trace, const Tensor& grad_output, Gradients& grads,
                  const BackwardOptions& opts = {}) const {
    const std::size_t n = layers_.size();
    if (grad_output.shape() != output_shape()) {
      throw ShapeError("backward: output gradient " + shape_string(grad_output.shape()) +
                       " does not match model output " + shape_string(output_shape()));
    }
    std::size_t stop = 0;
    if (opts.skip_frozen) {
      stop = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (layers_[i].spec.has_params() && !layers_[i].spec.frozen) {
          stop = i;
          break;
        }
      }
    }
    std::vector<Tensor> g(n + 1);
    g[n] = grad_output;
    auto grad_at = [&](std::size_t a) -> Tensor& {
      if (g[a].empty()) g[a] = Tensor(a == 0 ? input_shape_ : layers_[a - 1].out_shape);
      return g[a];
    };
    for (std::size_t idx = n; idx-- > stop;) {
      const Layer& layer = layers_[idx];
      if (g[idx + 1].empty()) continue;
      const Tensor& gy = g[idx + 1];
      const Tensor& x = trace.activations[idx];
      const bool need_input = idx > stop || (stop == 0 && !opts.skip_frozen && opts.input_gradient);
      switch (layer.spec.kind) {
        case LayerKind::conv2d:
          if (!(opts.skip_frozen && layer.spec.frozen)) {
            conv2d_backward(x, layer.params[0], gy, layer.spec.stride, layer.spec.padding,
                            need_input ? &grad_at(idx) : nullptr, grads.per_layer[idx][0],
                            grads.per_layer[idx][1]);
          } else if (need_input) {
            Tensor scratch_w(layer.params[0].shape()), scratch_b(layer.params[1].shape());
            conv2d_backward(x, layer.params[0], gy, layer.spec.stride, layer.spec.padding,
                            &grad_at(idx), scratch_w, scratch_b);
          }
          break;
        case LayerKind::dense:
          if (!(opts.skip_frozen && layer.spec.frozen)) {
            dense_backward(x, layer.params[0], gy, need_input ? &grad_at(idx) : nullptr,
                           grads.per_layer[idx][0], grads.per_layer[idx][1]);
          } else if (need_input) {
            Tensor scratch_w(layer.params[0].shape()), scratch_b(layer.params[1].shape());
            dense_backward(x, layer.params[0], gy, &grad_at(idx), scratch_w, scratch_b);
          }
          break;
        case LayerKind::relu: {
          if (!need_input) break;
          Tensor& gx = grad_at(idx);
          for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += x[k] > 0.0 ? gy[k] : 0.0;
          break;
        }
        case LayerKind::dropout: {
          if (!need_input) break;
          Tensor& gx = grad_at(idx);
          const Tensor& mask = trace.dropout_masks[idx];
          for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += mask.empty() ? gy[k] : gy[k] * mask[k];
          break;
        }
        case LayerKind::residual_add: {
          const std::size_t src = static_cast<std::size_t>(layer.spec.skip_from + 1);
          if (need_input) {
            Tensor& gx = grad_at(idx);
            for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += gy[k];
          }
          if (src > stop || (src == 0 && !opts.skip_frozen && opts.input_gradient)) {
            Tensor& gs = grad_at(src);
            for (std::size_t k = 0; k < gy.size(); ++k) gs[k] += gy[k];
          }
          break;
        }
        case LayerKind::flatten: {
          if (!need_input) break;
          Tensor& gx = grad_at(idx);
          for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += gy[k];
          break;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& t : grads.per_layer[i]) {
        if (!t.all_finite()) {
          throw NumericError("non-finite gradient in layer " + std::to_string(i) + " (" +
                                 to_string(layers_[i].spec.kind) + ")",
                             static_cast<int>(i));
        }
      }
    }
    return stop == 0 && opts.input_gradient ? std::move(g[0]) : Tensor{};
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.param_count();
    return n;
  }
  std::size_t trainable_param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_)
      if (!l.spec.frozen) n += l.param_count();
    return n;
  }

 private:
  void check_input(const Tensor& input) const {
    if (input.shape() != input_shape_) {
      throw ShapeError("model input shape " + shape_string(input.shape()) + " does not match declared " +
                       shape_string(input_shape_));
    }
  }

  Tensor apply(std::size_t i, const std::vector<Tensor>& acts, const ForwardOptions& opts,
               Tensor* mask_out) const {
    const Layer& layer = layers_[i];
    const Tensor& x = acts[i];
    switch (layer.spec.kind) {
      case LayerKind::conv2d:
        return conv2d(x, layer.params[0], layer.params[1], layer.spec.stride, layer.spec.padding);
      case LayerKind::dense:
        return dense(x, layer.params[0], layer.params[1]);
      case LayerKind::relu:
        return relu(x);
      case LayerKind::dropout: {
        const double rate = layer.spec.dropout_rate;
        if (!opts.training || rate == 0.0) return x;
        if (!opts.rng) throw UsageError("training-mode dropout needs a random generator");
        // Inverted dropout: survivors are scaled at train time.
        Tensor mask(x.shape());
        const double keep_scale = 1.0 / (1.0 - rate);
        for (double& m : mask.storage()) m = opts.rng->uniform() < rate ? 0.0 : keep_scale;
        Tensor y = x;
        for (std::size_t k = 0; k < y.size(); ++k) y[k] *= mask[k];
        if (mask_out) *mask_out = std::move(mask);
        return y;
      }
      case LayerKind::residual_add: {
        Tensor y = x;
        const Tensor& s = acts[static_cast<std::size_t>(layer.spec.skip_from + 1)];
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += s[k];
        return y;
      }
      case LayerKind::flatten:
        return x.reshaped({x.size()});
    }
    return x;
  }

  Shape input_shape_;
  std::vector<Layer> layers_;
};

/// One forward/backward pass under the mean-squared-error loss; accumulates
/// into grads and returns the loss.
inline double backprop(const Model& model, const Tensor& input, const Tensor& target, Gradients& grads,
                       const ForwardOptions& fwd = {}, const BackwardOptions& bwd = {}) {
  const Trace trace = model.forward(input, fwd);
  const Tensor& pred = trace.activations.back();
  const double loss = mse_loss(pred, target);
  model.backward(trace, mse_loss_grad(pred, target), grads, bwd);
  return loss;
}

}  // namespace csipos::numerics
