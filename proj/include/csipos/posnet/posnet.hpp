#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "csipos/channel/types.hpp"
#include "csipos/features/features.hpp"
#include "csipos/numerics/hash.hpp"
#include "csipos/numerics/network.hpp"

namespace csipos::posnet {

using numerics::Extent2;
using numerics::LayerKind;
using numerics::LayerSpec;
using numerics::Model;
using numerics::Tensor;

struct ConvSpec {
  Extent2 kernel;
  std::size_t out_channels = 0;
  Extent2 stride{1, 1};
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

inline constexpr std::size_t kConvLayers = 13;
inline constexpr std::size_t kDenseLayers = 3;

/// Two convolution stages and a dense head.
///
/// Stage 1 kernels span only the subcarrier axis, so every antenna row is
/// filtered independently; stage 2 kernels mix rows. Within a stage, every
/// run of `residual_period` convolutions opens with a transition layer that
/// may change shape, and the rest are wrapped as y = x + relu(conv(x)).
struct ArchConfig {
  std::size_t n_antennas = 64;
  std::size_t n_subcarriers = 16;
  std::vector<ConvSpec> stage1;
  std::vector<ConvSpec> stage2;
  std::size_t residual_period = 2;
  double dropout_rate = 0.0;
  std::vector<std::size_t> head;

  static ArchConfig defaults(std::size_t n_antennas, std::size_t n_subcarriers) {
    ArchConfig a;
    a.n_antennas = n_antennas;
    a.n_subcarriers = n_subcarriers;
    a.stage1 = {{{1, 5}, 16}, {{1, 3}, 16}, {{1, 3}, 32, {1, 2}}, {{1, 3}, 32},
                {{1, 3}, 32, {1, 2}}, {{1, 3}, 32}, {{1, 3}, 32, {1, 2}}, {{1, 3}, 32}};
    a.stage2 = {{{3, 1}, 64, {2, 1}}, {{3, 1}, 64}, {{3, 1}, 64, {2, 1}}, {{5, 1}, 64}, {{3, 1}, 16}};
    a.head = {48, 32, 2};
    return a;
  }

  void validate() const {
    if (n_antennas == 0 || n_subcarriers == 0) throw ConfigError("arch: empty input extent");
    if (stage1.size() + stage2.size() != kConvLayers) {
      throw ConfigError("arch: need exactly 13 convolution layers, got " + std::to_string(stage1.size() + stage2.size()));
    }
    if (head.size() != kDenseLayers || head.back() != 2) {
      throw ConfigError("arch: head must list 3 dense widths ending in 2");
    }
    for (const auto& c : stage1) {
      if (c.kernel.rows != 1 || c.stride.rows != 1) {
        throw ConfigError("arch: stage-1 kernels and strides must act on the subcarrier axis only");
      }
    }
    for (const auto* stage : {&stage1, &stage2})
      for (const auto& c : *stage)
        if (c.kernel.rows == 0 || c.kernel.cols == 0 || c.out_channels == 0 || c.stride.rows == 0 || c.stride.cols == 0) {
          throw ConfigError("arch: kernel extents, strides and channel counts must be >= 1");
        }
    if (residual_period == 0) throw ConfigError("arch: residual period must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("arch: dropout rate must lie in [0, 1)");
  }

  /// Canonical text form; stored in model files and hashed.
  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "input " << n_antennas << ' ' << n_subcarriers << '\n';
    auto put = [&](const char* tag, const std::vector<ConvSpec>& s) {
      for (const auto& c : s) {
        os << tag << ' ' << c.kernel.rows << ' ' << c.kernel.cols << ' ' << c.out_channels << ' ' << c.stride.rows
           << ' ' << c.stride.cols << '\n';
      }
    };
    put("s1", stage1);
    put("s2", stage2);
    os << "residual_period " << residual_period << '\n';
    os << "dropout " << dropout_rate << '\n';
    os << "head";
    for (auto w : head) os << ' ' << w;
    os << '\n';
    return os.str();
  }

  static ArchConfig deserialize(const std::string& text) {
    ArchConfig a;
    std::istringstream is(text);
    std::string tag;
    while (is >> tag) {
      if (tag == "input") {
        is >> a.n_antennas >> a.n_subcarriers;
      } else if (tag == "s1" || tag == "s2") {
        ConvSpec c;
        is >> c.kernel.rows >> c.kernel.cols >> c.out_channels >> c.stride.rows >> c.stride.cols;
        (tag == "s1" ? a.stage1 : a.stage2).push_back(c);
      } else if (tag == "residual_period") {
        is >> a.residual_period;
      } else if (tag == "dropout") {
        is >> a.dropout_rate;
      } else if (tag == "head") {
        std::string rest;
        std::getline(is, rest);
        std::istringstream hs(rest);
        std::size_t w;
        while (hs >> w) a.head.push_back(w);
      } else {
        throw DataError("arch: unknown record '" + tag + "'");
      }
      if (is.fail()) throw DataError("arch: malformed record '" + tag + "'");
    }
    return a;
  }

  std::uint64_t hash() const {
    return numerics::fnv1a(serialize());
  }

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

/// Index (into Model::layers()) of the first layer after stage 1 and its
/// trailing dropout, recorded while building.
struct LayerPlan {
  std::size_t stage1_end = 0;
  std::size_t stage2_end = 0;
};

struct BuiltNetwork {
  Model net;
  LayerPlan plan;
};

inline BuiltNetwork build_network(const ArchConfig& arch) {
  arch.validate();
  BuiltNetwork b{Model({arch.n_antennas, arch.n_subcarriers, features::kPlaneCount}), {}};
  Model& m = b.net;
  auto add_stage = [&](const std::vector<ConvSpec>& stage, const char* prefix) {
    for (std::size_t i = 0; i < stage.size(); ++i) {
      const ConvSpec& c = stage[i];
      const int source = static_cast<int>(m.size()) - 1;
      LayerSpec conv = LayerSpec::conv(c.kernel, m.output_shape().back(), c.out_channels, c.stride);
      conv.name = std::string(prefix) + ".conv" + std::to_string(i + 1);
      m.add(conv);
      m.add(LayerSpec::relu());
      if (i % arch.residual_period != 0) {
        LayerSpec skip = LayerSpec::residual(source);
        skip.name = std::string(prefix) + ".skip" + std::to_string(i + 1);
        m.add(skip);
      }
    }
    m.add(LayerSpec::dropout(arch.dropout_rate));
  };
  add_stage(arch.stage1, "s1");
  b.plan.stage1_end = m.size();
  add_stage(arch.stage2, "s2");
  b.plan.stage2_end = m.size();
  m.add(LayerSpec::flatten());
  for (std::size_t i = 0; i < arch.head.size(); ++i) {
    LayerSpec d = LayerSpec::dense(m.output_shape()[0], arch.head[i]);
    d.name = "head.dense" + std::to_string(i + 1);
    m.add(d);
    if (i + 1 < arch.head.size()) m.add(LayerSpec::relu());
  }
  return b;
}

/// A positioning network together with everything needed to go from a raw
/// channel matrix to a position in mm.
struct PositioningModel {
  ArchConfig arch;
  std::uint64_t seed = 0;
  Model net;
  LayerPlan plan;
  features::FeatureNormalizer normalizer;
  features::LabelMap label_map;

  std::size_t n_antennas() const { return arch.n_antennas; }
  std::size_t n_subcarriers() const { return arch.n_subcarriers; }
};

/// Full-gain He init makes the stacked residual branches blow up the
/// activations; a third of the variance keeps the first epochs stable.
inline const double kInitGain = 1.0 / std::sqrt(3.0);

inline PositioningModel build_positioning_cnn(const ArchConfig& arch, std::uint64_t seed) {
  BuiltNetwork b = build_network(arch);
  b.net.initialize(seed, kInitGain);
  return {arch, seed, std::move(b.net), b.plan, {}, {}};
}

/// Human-readable layer table with per-layer parameter counts.
inline std::string layer_table(const Model& m) {
  std::ostringstream os;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& l = m.layers()[i];
    os << i << '\t' << numerics::to_string(l.spec.kind) << '\t' << l.spec.name << '\t'
       << numerics::shape_string(l.out_shape) << '\t' << l.param_count() << (l.spec.frozen ? "\tfrozen" : "") << '\n';
  }
  os << "total\t" << m.param_count() << '\n';
  return os.str();
}

/// Normalized (x, y) estimate for a normalized feature tensor. Dropout off.
inline std::array<double, 2> predict(const PositioningModel& model, const features::FeatureTensor& input) {
  const Tensor out = model.net.predict(input);
  if (!out.all_finite()) throw NumericError("predict: non-finite network output");
  return {out[0], out[1]};
}

/// Raw channel matrix in, position estimate in mm out.
inline channel::Position locate(const PositioningModel& model, std::span<const std::complex<double>> H) {
  features::FeatureTensor f = features::build_feature_tensor(H, model.n_antennas(), model.n_subcarriers());
  model.normalizer.apply(f);
  const auto uv = predict(model, f);
  return model.label_map.denormalize(uv[0], uv[1]);
}

struct ParamCount {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t frozen() const { return total - trainable; }
};

inline ParamCount param_count(const Model& m) { return {m.param_count(), m.trainable_param_count()}; }

/// Indices of the convolution and dense layers, in order. Freeze boundaries
/// count positions in this list.
inline std::vector<std::size_t> parameter_layers(const Model& m) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.layers()[i].spec.has_params()) idx.push_back(i);
  return idx;
}

/// The boundary that freezes exactly the stage-1 convolutions.
inline std::size_t default_freeze_boundary(const PositioningModel& m) { return m.arch.stage1.size(); }

/// Freezes the first `boundary` parameterized layers and marks the rest
/// trainable. Parameters are kept as they are.
inline void split_for_transfer(Model& m, std::size_t boundary) {
  const auto idx = parameter_layers(m);
  if (boundary == 0 || boundary >= idx.size()) {
    throw ConfigError("freeze boundary " + std::to_string(boundary) + " outside 1.." + std::to_string(idx.size() - 1));
  }
  for (std::size_t i = 0; i < idx.size(); ++i) m.layers()[idx[i]].spec.frozen = i < boundary;
}

}  // namespace csipos::posnet
