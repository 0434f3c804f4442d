#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "csipos/channel/simulator.hpp"
#include "csipos/numerics/hash.hpp"
#include "csipos/trainer/trainer.hpp"

using namespace csipos;
using namespace csipos::trainer;

namespace {

// 8 URA elements, 16 subcarriers, 6x6 grid over the area.
channel::Dataset small_dataset(channel::TopologyKind kind = channel::TopologyKind::ura, double step = 250.0) {
  channel::GeometryConfig geo;
  auto topo = channel::build_topology(kind, geo);
  topo = channel::select_elements(topo, {0, 8, 16, 24, 32, 40, 48, 56});
  return channel::generate_grid_dataset(topo, {}, geo, {step}, 3);
}

std::uint64_t param_hash(const numerics::Model& m, std::size_t first, std::size_t last) {
  numerics::Fnv1a h;
  for (std::size_t i = first; i < last; ++i) {
    for (const auto& p : m.layers()[i].params) {
      const auto& s = p.storage();
      h.update({reinterpret_cast<const unsigned char*>(s.data()), s.size() * sizeof(double)});
    }
  }
  return h.digest();
}

bool same_params(const numerics::Model& a, const numerics::Model& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.layers()[i].params != b.layers()[i].params) return false;
  return true;
}

posnet::PositioningModel small_model(std::uint64_t seed = 1) {
  return posnet::build_positioning_cnn(posnet::ArchConfig::defaults(8, 16), seed);
}

}  // namespace

TEST(Split, HundredSamples) {
  const auto s = split_dataset(100, {});
  EXPECT_EQ(s.train.size(), 85u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 5u);
}

TEST(Split, AlwaysPartitions) {
  numerics::Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng.below(3000);
    SplitConfig cfg;
    cfg.seed = rng.below(1000000);
    const auto s = split_dataset(n, cfg);
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      EXPECT_FALSE(part->empty());
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
  }
}

TEST(Split, SeededAndRejectsTiny) {
  SplitConfig a, b;
  b.seed = 2;
  EXPECT_EQ(split_dataset(500, a).train, split_dataset(500, a).train);
  EXPECT_NE(split_dataset(500, a).train, split_dataset(500, b).train);
  EXPECT_THROW(split_dataset(5, a), DataError);
  EXPECT_THROW(split_dataset(0, a), DataError);
  SplitConfig bad;
  bad.train_frac = 0.9;
  EXPECT_THROW(split_dataset(100, bad), ConfigError);
}

TEST(Split, DrawSubset) {
  std::vector<std::size_t> pool(50);
  std::iota(pool.begin(), pool.end(), std::size_t{100});
  const auto a = draw_subset(pool, 20, 9);
  EXPECT_EQ(a.size(), 20u);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 20u);
  for (auto v : a) EXPECT_TRUE(v >= 100 && v < 150);
  EXPECT_EQ(a, draw_subset(pool, 20, 9));
  EXPECT_THROW(draw_subset(pool, 0, 9), ConfigError);
  EXPECT_THROW(draw_subset(pool, 51, 9), ConfigError);
}

TEST(Budget, StratifiedSpreadsOverArea) {
  const auto ds = small_dataset();
  const auto s = split_dataset(ds.size(), {});
  TrainConfig cfg;
  cfg.sample_budget = 6;
  cfg.subset = SubsetStrategy::stratified;
  const auto rows = budget_rows(ds, s.train, cfg);
  ASSERT_EQ(rows.size(), 6u);
  double lo = 1e9, hi = -1e9;
  for (auto r : rows) {
    lo = std::min(lo, ds.samples[r].position.y);
    hi = std::max(hi, ds.samples[r].position.y);
  }
  EXPECT_GE(hi - lo, 750.0);
}

TEST(Train, ZeroEpochsIsNoOp) {
  const auto ds = small_dataset();
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto init = small_model();
  const auto r = fit(init, ds, {}, cfg);
  EXPECT_TRUE(r.history.epochs.empty());
  EXPECT_TRUE(same_params(r.model.net, init.net));
}

TEST(Train, MemorizesTenSamples) {
  const auto ds = small_dataset();
  auto model = small_model(3);
  std::vector<std::size_t> rows = {0, 4, 7, 11, 15, 18, 22, 26, 30, 35};
  fit_normalization(model, ds, rows);
  const auto set = make_set(model, ds, rows);
  TrainConfig cfg;
  cfg.epochs = 600;
  cfg.batch_size = 10;
  cfg.patience = cfg.epochs;
  cfg.lr_decay_every = 200;
  const auto h = train(model, set, set, cfg);
  EXPECT_LT(evaluate_set(model, set).loss, 1e-4);
  EXPECT_LT(h.best_val_me_mm, h.epochs.front().val_me_mm);
}

TEST(Train, SameSeedSameResult) {
  const auto ds = small_dataset();
  TrainConfig cfg;
  cfg.epochs = 3;
  const auto a = fit(small_model(), ds, {}, cfg);
  const auto b = fit(small_model(), ds, {}, cfg);
  EXPECT_TRUE(same_params(a.model.net, b.model.net));
  ASSERT_EQ(a.history.epochs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.history.epochs[i].train_loss, b.history.epochs[i].train_loss);
}

TEST(Train, HistoryCsv) {
  History h;
  h.epochs.push_back({1, 0.5, 0.25, 12.0});
  std::ostringstream os;
  write_history(os, h);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,train_loss,val_loss,val_me_mm");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Train, NonFiniteLossNamesEpoch) {
  const auto ds = small_dataset();
  auto model = small_model();
  std::vector<std::size_t> rows = {0, 1, 2, 3};
  fit_normalization(model, ds, rows);
  auto set = make_set(model, ds, rows);
  set.inputs[2].storage()[5] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 2;
  try {
    train(model, set, set, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, ShapeMismatchIsReported) {
  const auto ds = small_dataset();
  const auto m = posnet::build_positioning_cnn(posnet::ArchConfig::defaults(16, 16), 1);
  try {
    fit(m, ds, {}, {});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("subsample"), std::string::npos);
  }
}

TEST(Transfer, FrozenLayersUnchanged) {
  const auto ura = small_dataset();
  const auto ula = small_dataset(channel::TopologyKind::ula);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto pre = fit(small_model(), ura, {}, cfg).model;
  const std::size_t cut = pre.plan.stage1_end;
  const std::uint64_t before = param_hash(pre.net, 0, cut);
  const auto r = transfer_train(pre, ula, 12, 8, {}, cfg);
  EXPECT_EQ(param_hash(r.model.net, 0, cut), before);
  EXPECT_NE(param_hash(r.model.net, cut, r.model.net.size()), param_hash(pre.net, cut, pre.net.size()));
  EXPECT_EQ(r.train_rows.size(), 12u);
  // the source model is untouched
  for (const auto& l : pre.net.layers()) EXPECT_FALSE(l.spec.frozen);
}

TEST(Transfer, CachedPrefixMatchesPlainTraining) {
  const auto ura = small_dataset();
  const auto ula = small_dataset(channel::TopologyKind::ula);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto pre = fit(small_model(), ura, {}, cfg).model;
  for (std::size_t boundary : {3u, 8u, 11u}) {
    auto cached = cfg, plain = cfg;
    plain.cache_frozen_prefix = false;
    const auto a = transfer_train(pre, ula, 20, boundary, {}, cached);
    const auto b = transfer_train(pre, ula, 20, boundary, {}, plain);
    EXPECT_TRUE(same_params(a.model.net, b.model.net)) << boundary;
    EXPECT_EQ(a.history.epochs.back().val_me_mm, b.history.epochs.back().val_me_mm);
  }
}

TEST(Transfer, BudgetErrors) {
  const auto ds = small_dataset();
  const auto m = small_model();
  EXPECT_THROW(transfer_train(m, ds, 0, 8, {}, {}), ConfigError);
  EXPECT_THROW(transfer_train(m, ds, 10000, 8, {}, {}), ConfigError);
  EXPECT_THROW(transfer_train(m, ds, 5, 99, {}, {}), ConfigError);
}
