#include <gtest/gtest.h>

#include <algorithm>

#include "csipos/channel/simulator.hpp"
#include "csipos/posnet/posnet.hpp"

using namespace csipos;
using namespace csipos::posnet;

namespace {

features::FeatureTensor random_input(std::size_t N, std::size_t K, std::uint64_t seed) {
  numerics::Rng rng(seed);
  features::FeatureTensor t({N, K, 6});
  for (double& v : t.storage()) v = rng.uniform(-1, 1);
  return t;
}

}  // namespace

TEST(Arch, ThirteenConvolutionsAndThreeDenseLayers) {
  const auto m = build_positioning_cnn(ArchConfig::defaults(64, 16), 1);
  std::size_t conv = 0, dense = 0;
  for (const auto& l : m.net.layers()) {
    conv += l.spec.kind == LayerKind::conv2d;
    dense += l.spec.kind == LayerKind::dense;
  }
  EXPECT_EQ(conv, 13u);
  EXPECT_EQ(dense, 3u);
  EXPECT_EQ(m.net.output_shape(), (numerics::Shape{2}));
  for (const auto& c : m.arch.stage1) EXPECT_EQ(c.kernel.rows, 1u);
}

TEST(Arch, ParameterCounts) {
  const auto full = build_positioning_cnn(ArchConfig::defaults(64, 100), 1);
  const std::size_t n = full.net.param_count();
  EXPECT_GE(n, 150000u);
  EXPECT_LE(n, 300000u);
  EXPECT_EQ(n, 234338u);
  EXPECT_LT(build_positioning_cnn(ArchConfig::defaults(8, 100), 1).net.param_count(), n);
  EXPECT_EQ(build_positioning_cnn(ArchConfig::defaults(64, 16), 1).net.param_count(), 99170u);
}

TEST(Arch, ParamCountIsSumOverLayers) {
  const auto m = build_positioning_cnn(ArchConfig::defaults(32, 16), 1);
  std::size_t sum = 0;
  for (const auto& l : m.net.layers()) {
    if (l.spec.kind == LayerKind::conv2d) {
      sum += l.spec.kernel.rows * l.spec.kernel.cols * l.spec.in_channels * l.spec.out_channels + l.spec.out_channels;
    } else if (l.spec.kind == LayerKind::dense) {
      sum += l.spec.in_channels * l.spec.out_channels + l.spec.out_channels;
    }
  }
  EXPECT_EQ(param_count(m.net).total, sum);
}

TEST(Arch, SmallLayerCounts) {
  numerics::Model d({4});
  d.add(LayerSpec::dense(4, 2));
  EXPECT_EQ(d.param_count(), 10u);
  numerics::Model c({2, 8, 6});
  c.add(LayerSpec::conv({1, 3}, 6, 16));
  EXPECT_EQ(c.param_count(), 304u);
}

TEST(Arch, ValidationRejectsBadLayouts) {
  auto a = ArchConfig::defaults(8, 16);
  a.stage2.pop_back();
  EXPECT_THROW(build_positioning_cnn(a, 0), ConfigError);
  a = ArchConfig::defaults(8, 16);
  a.head.back() = 3;
  EXPECT_THROW(build_positioning_cnn(a, 0), ConfigError);
  a = ArchConfig::defaults(8, 16);
  a.stage1[0].kernel = {3, 3};
  EXPECT_THROW(build_positioning_cnn(a, 0), ConfigError);
}

TEST(Arch, ShapeFailureNamesLayer) {
  auto a = ArchConfig::defaults(8, 16);
  a.stage2[0].stride = {9, 1};
  a.stage2[0].kernel = {9, 1};
  try {
    build_positioning_cnn(a, 0);
    // same-padding tolerates any stride; force a valid-padding failure instead
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos);
  }
  numerics::Model m({2, 2, 6});
  EXPECT_THROW(m.add(LayerSpec::conv({3, 1}, 6, 4, {1, 1}, numerics::Padding::valid)), ShapeError);
}

TEST(Arch, SerializeRoundTripAndHash) {
  const auto a = ArchConfig::defaults(16, 100);
  EXPECT_EQ(ArchConfig::deserialize(a.serialize()), a);
  auto b = a;
  b.stage2[1].out_channels = 63;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_THROW(ArchConfig::deserialize("bogus 1"), DataError);
}

TEST(Build, SameSeedSameParameters) {
  const auto a = build_positioning_cnn(ArchConfig::defaults(8, 16), 5);
  const auto b = build_positioning_cnn(ArchConfig::defaults(8, 16), 5);
  const auto c = build_positioning_cnn(ArchConfig::defaults(8, 16), 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.net.size(); ++i) {
    EXPECT_EQ(a.net.layers()[i].params, b.net.layers()[i].params);
    differs = differs || a.net.layers()[i].params != c.net.layers()[i].params;
  }
  EXPECT_TRUE(differs);
}

TEST(Build, LayerTableListsEveryLayer) {
  const auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 1);
  const std::string t = layer_table(m.net);
  EXPECT_EQ(static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n')), m.net.size() + 1);
  EXPECT_NE(t.find("total"), std::string::npos);
  EXPECT_NE(t.find("s1.conv1"), std::string::npos);
  EXPECT_NE(t.find("head.dense3"), std::string::npos);
}

TEST(Predict, DeterministicAndSideEffectFree) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 2);
  const auto x = random_input(8, 16, 1);
  const auto a = predict(m, x);
  const auto b = predict(m, x);
  EXPECT_EQ(a, b);
  EXPECT_THROW(predict(m, random_input(16, 16, 1)), ShapeError);
}

TEST(Predict, ZeroHeadGivesLastBias) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 2);
  auto& last = m.net.layers().back();
  last.params[0].fill(0.0);
  last.params[1] = numerics::Tensor({2}, {0.25, -0.5});
  const auto out = predict(m, random_input(8, 16, 3));
  EXPECT_EQ(out[0], 0.25);
  EXPECT_EQ(out[1], -0.5);
}

TEST(Predict, NotAntennaBlind) {
  const auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 4);
  const auto x = random_input(8, 16, 4);
  features::FeatureTensor y = x;
  std::vector<std::size_t> perm = {3, 0, 7, 1, 6, 2, 5, 4};
  for (std::size_t n = 0; n < 8; ++n)
    for (std::size_t k = 0; k < 16; ++k)
      for (std::size_t p = 0; p < 6; ++p) y.at(n, k, p) = x.at(perm[n], k, p);
  EXPECT_NE(predict(m, x), predict(m, y));
}

TEST(Predict, ZeroResidualBranchesEqualPlainChain) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 7);
  auto& L = m.net.layers();
  // Zero every conv that feeds a residual add, and rebuild the net without those blocks.
  std::vector<bool> drop(L.size(), false);
  for (std::size_t i = 0; i + 2 < L.size(); ++i) {
    if (L[i].spec.kind == LayerKind::conv2d && L[i + 2].spec.kind == LayerKind::residual_add) {
      for (auto& p : L[i].params) p.fill(0.0);
      drop[i] = drop[i + 1] = drop[i + 2] = true;
    }
  }
  numerics::Model plain(m.net.input_shape());
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (drop[i]) continue;
    plain.add(L[i].spec);
    plain.layers().back().params = L[i].params;
  }
  EXPECT_LT(plain.size(), m.net.size());
  const auto x = random_input(8, 16, 8);
  EXPECT_EQ(plain.predict(x), m.net.predict(x));
}

TEST(Transfer, BoundaryRange) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 1);
  EXPECT_THROW(split_for_transfer(m.net, 0), ConfigError);
  EXPECT_THROW(split_for_transfer(m.net, 16), ConfigError);
  EXPECT_NO_THROW(split_for_transfer(m.net, 15));
}

TEST(Transfer, DefaultBoundaryFreezesStageOne) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 1);
  const ParamCount before = param_count(m.net);
  EXPECT_EQ(before.trainable, before.total);
  const std::size_t b = default_freeze_boundary(m);
  EXPECT_EQ(b, 8u);
  split_for_transfer(m.net, b);
  std::size_t stage1 = 0;
  for (std::size_t i = 0; i < m.net.size(); ++i) {
    const auto& l = m.net.layers()[i];
    if (!l.spec.has_params()) continue;
    EXPECT_EQ(l.spec.frozen, i < m.plan.stage1_end) << i;
    if (i < m.plan.stage1_end) stage1 += l.param_count();
  }
  const ParamCount after = param_count(m.net);
  EXPECT_EQ(after.total, before.total);
  EXPECT_EQ(after.frozen(), stage1);
  EXPECT_EQ(after.trainable, before.trainable - stage1);
}

TEST(Transfer, ParametersRetainedNotReset) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 1);
  const auto copy = m.net;
  split_for_transfer(m.net, 3);
  for (std::size_t i = 0; i < m.net.size(); ++i) EXPECT_EQ(m.net.layers()[i].params, copy.layers()[i].params);
}

TEST(Locate, ReturnsMillimetres) {
  auto m = build_positioning_cnn(ArchConfig::defaults(8, 16), 1);
  m.label_map = {{-625, 1000, 1250, 1250}};
  auto& last = m.net.layers().back();
  last.params[0].fill(0.0);
  last.params[1] = numerics::Tensor({2}, {0.5, 0.5});
  channel::GeometryConfig geo;
  auto topo = channel::select_elements(channel::build_topology(channel::TopologyKind::ura, geo), {0, 8, 16, 24, 32, 40, 48, 56});
  const auto s = channel::synth_csi(topo, {}, {0, 1500}, 0);
  const auto p = locate(m, s.H);
  EXPECT_DOUBLE_EQ(p.x, 0.0);
  EXPECT_DOUBLE_EQ(p.y, 1625.0);
}
