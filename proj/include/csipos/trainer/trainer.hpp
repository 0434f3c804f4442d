#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "csipos/channel/simulator.hpp"
#include "csipos/features/features.hpp"
#include "csipos/numerics/adam.hpp"
#include "csipos/posnet/posnet.hpp"
#include "csipos/trainer/split.hpp"

namespace csipos::trainer {

using numerics::Tensor;

/// Normalized inputs and targets plus the original positions (mm).
struct TrainingSet {
  std::vector<Tensor> inputs;
  std::vector<std::array<double, 2>> targets;
  std::vector<channel::Position> positions;

  std::size_t size() const noexcept { return inputs.size(); }
};

enum class SubsetStrategy { uniform, stratified };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  numerics::AdamConfig adam;
  /// Stop after this many epochs without a better validation ME.
  std::size_t patience = 20;
  /// Multiply the learning rate by lr_decay_factor every lr_decay_every epochs (0 = constant).
  std::size_t lr_decay_every = 0;
  double lr_decay_factor = 0.5;
  std::uint64_t seed = 1;
  /// Cap on the number of training samples; drawn once, seeded.
  std::optional<std::size_t> sample_budget;
  SubsetStrategy subset = SubsetStrategy::uniform;
  /// Run the frozen leading layers once per sample instead of every step.
  bool cache_frozen_prefix = true;

  void validate() const {
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ConfigError("train: lr_decay_factor must lie in (0, 1]");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_me_mm = 0.0;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_val_me_mm = std::numeric_limits<double>::infinity();
};

/// Comma-separated table: epoch,train_loss,val_loss,val_me_mm.
inline void write_history(std::ostream& os, const History& h) {
  const auto old = os.precision(17);
  os << "epoch,train_loss,val_loss,val_me_mm\n";
  for (const auto& r : h.epochs) os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_me_mm << '\n';
  os.precision(old);
}

/// Raw (unnormalized) feature tensors for the given dataset rows.
inline std::vector<Tensor> raw_features(const channel::Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<Tensor> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    out.push_back(features::build_feature_tensor(ds.samples.at(r).H, ds.n_antennas, ds.n_subcarriers));
  }
  return out;
}

/// Label map spanning every position in the dataset (the scanned user area).
inline features::LabelMap area_label_map(const channel::Dataset& ds) {
  std::vector<channel::Position> all;
  all.reserve(ds.size());
  for (const auto& s : ds.samples) all.push_back(s.position);
  return features::LabelMap::fit(all);
}

/// Features normalized with the model's fitted statistics, targets through its label map.
inline TrainingSet make_set(const posnet::PositioningModel& model, const channel::Dataset& ds,
                            std::span<const std::size_t> rows) {
  TrainingSet set;
  set.inputs = raw_features(ds, rows);
  for (auto& t : set.inputs) model.normalizer.apply(t);
  for (std::size_t r : rows) {
    const auto& p = ds.samples[r].position;
    set.positions.push_back(p);
    set.targets.push_back(model.label_map.normalize(p));
  }
  return set;
}

/// Fits input statistics on the training rows only and the label map on the
/// dataset's area, storing both in the model.
inline void fit_normalization(posnet::PositioningModel& model, const channel::Dataset& ds,
                              std::span<const std::size_t> train_rows) {
  const auto raw = raw_features(ds, train_rows);
  model.normalizer = features::FeatureNormalizer::fit(raw);
  model.label_map = area_label_map(ds);
}

inline void check_shapes(const posnet::PositioningModel& model, const channel::Dataset& ds) {
  if (model.n_antennas() != ds.n_antennas || model.n_subcarriers() != ds.n_subcarriers) {
    throw ShapeError("model expects " + std::to_string(model.n_antennas()) + " antennas x " +
                     std::to_string(model.n_subcarriers()) + " subcarriers but the dataset has " +
                     std::to_string(ds.n_antennas) + " x " + std::to_string(ds.n_subcarriers) +
                     "; subsample antennas or regenerate with matching settings");
  }
}

struct Evaluation {
  double loss = 0.0;   // mean MSE in normalized units
  double me_mm = 0.0;  // mean Euclidean error
};

inline Evaluation evaluate_set(const posnet::PositioningModel& model, const TrainingSet& set) {
  Evaluation e;
  if (set.size() == 0) return e;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto uv = posnet::predict(model, set.inputs[i]);
    const double du = uv[0] - set.targets[i][0], dv = uv[1] - set.targets[i][1];
    e.loss += 0.5 * (du * du + dv * dv);
    const auto p = model.label_map.denormalize(uv[0], uv[1]);
    e.me_mm += std::hypot(p.x - set.positions[i].x, p.y - set.positions[i].y);
  }
  e.loss /= static_cast<double>(set.size());
  e.me_mm /= static_cast<double>(set.size());
  return e;
}

namespace detail {

inline std::vector<std::vector<Tensor>> snapshot(const numerics::Model& m) {
  std::vector<std::vector<Tensor>> s;
  for (const auto& l : m.layers()) s.push_back(l.params);
  return s;
}

inline void restore(numerics::Model& m, const std::vector<std::vector<Tensor>>& s) {
  for (std::size_t i = 0; i < s.size(); ++i) m.layers()[i].params = s[i];
}

}  // namespace detail

/// Mini-batch Adam on the mean-squared error of normalized positions.
///
/// After every epoch the validation ME is measured; the parameters of the
/// best epoch are restored when training ends (after `epochs`, or when
/// `patience` epochs pass without improvement). Frozen layers never change.
/// A single generator seeded from cfg.seed drives shuffling and dropout.
inline History train(posnet::PositioningModel& model, const TrainingSet& train_set, const TrainingSet& val_set,
                     const TrainConfig& cfg) {
  cfg.validate();
  History history;
  if (cfg.epochs == 0) return history;
  if (train_set.size() == 0) throw DataError("train: empty training set");
  if (val_set.size() == 0) throw DataError("train: empty validation set");

  numerics::Model& net = model.net;
  numerics::AdamState adam = numerics::AdamState::for_model(net, cfg.adam);
  numerics::Rng rng(cfg.seed);
  numerics::Gradients grads = net.make_gradients();
  const numerics::BackwardOptions bwd{true, false};
  const numerics::ForwardOptions fwd{true, &rng};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto best = detail::snapshot(net);
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.lr_decay_every > 0) {
      adam.config.lr = cfg.adam.lr * std::pow(cfg.lr_decay_factor, static_cast<double>((epoch - 1) / cfg.lr_decay_every));
    }
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      grads.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const Tensor target({2}, {train_set.targets[i][0], train_set.targets[i][1]});
        try {
          loss_sum += numerics::backprop(net, train_set.inputs[i], target, grads, fwd, bwd);
        } catch (const NumericError& e) {
          detail::restore(net, best);
          throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (" + e.what() +
                             "); last finite epoch was " + std::to_string(epoch - 1));
        }
      }
      grads.scale(1.0 / static_cast<double>(stop - start));
      numerics::adam_update(net, grads, adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(rec.train_loss)) {
      detail::restore(net, best);
      throw NumericError("training diverged in epoch " + std::to_string(epoch) + "; last finite epoch was " +
                         std::to_string(epoch - 1));
    }
    const Evaluation v = evaluate_set(model, val_set);
    rec.val_loss = v.loss;
    rec.val_me_mm = v.me_mm;
    history.epochs.push_back(rec);
    if (v.me_mm < history.best_val_me_mm) {
      history.best_val_me_mm = v.me_mm;
      history.best_epoch = epoch;
      best = detail::snapshot(net);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  detail::restore(net, best);
  return history;
}

/// Rows to train on: the whole training split, or a seeded subset of it
/// when a sample budget is set.
inline std::vector<std::size_t> budget_rows(const channel::Dataset& ds, const std::vector<std::size_t>& train_rows,
                                            const TrainConfig& cfg) {
  if (!cfg.sample_budget) return train_rows;
  const std::uint64_t seed = numerics::mix_seed(cfg.seed, 0xb0d6e7);
  if (cfg.subset == SubsetStrategy::uniform) return draw_subset(train_rows, *cfg.sample_budget, seed);
  // Stratified: order by (y, x), cut into `budget` equal strata, draw one per stratum.
  const std::size_t count = *cfg.sample_budget;
  if (count == 0 || count > train_rows.size()) return draw_subset(train_rows, count, seed);
  std::vector<std::size_t> sorted = train_rows;
  std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = ds.samples[a].position;
    const auto& pb = ds.samples[b].position;
    return pa.y != pb.y ? pa.y < pb.y : pa.x < pb.x;
  });
  numerics::Rng rng(seed);
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t lo = s * sorted.size() / count, hi = (s + 1) * sorted.size() / count;
    out.push_back(sorted[lo + rng.below(hi - lo)]);
  }
  return out;
}

namespace detail {

/// Number of leading layers that are frozen and deterministic in training
/// mode, backed off until the rest of the network can be cut off there.
inline std::size_t frozen_prefix(const numerics::Model& m) {
  std::size_t end = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& s = m.layers()[i].spec;
    if (s.has_params() && !s.frozen) break;
    if (s.kind == numerics::LayerKind::dropout && s.dropout_rate > 0.0) break;
    end = i + 1;
  }
  for (; end > 0; --end) {
    try {
      (void)m.slice(end, m.size());
      return end;
    } catch (const ShapeError&) {
    }
  }
  return 0;
}

inline TrainingSet through(const numerics::Model& prefix, TrainingSet set) {
  for (auto& x : set.inputs) x = prefix.predict(x);
  return set;
}

}  // namespace detail

/// Same result as train(), but a frozen, dropout-free leading part of the
/// network is evaluated once per sample up front.
inline History train_cached(posnet::PositioningModel& model, const TrainingSet& train_set, const TrainingSet& val_set,
                            const TrainConfig& cfg) {
  const std::size_t p = cfg.cache_frozen_prefix ? detail::frozen_prefix(model.net) : 0;
  if (p == 0 || p == model.net.size()) return train(model, train_set, val_set, cfg);
  const numerics::Model prefix = model.net.slice(0, p);
  posnet::PositioningModel tail{model.arch, model.seed, model.net.slice(p, model.net.size()), model.plan,
                                model.normalizer, model.label_map};
  History h = train(tail, detail::through(prefix, train_set), detail::through(prefix, val_set), cfg);
  for (std::size_t i = p; i < model.net.size(); ++i) model.net.layers()[i].params = tail.net.layers()[i - p].params;
  return h;
}

struct TrainResult {
  posnet::PositioningModel model;
  History history;
  Split split;
  std::vector<std::size_t> train_rows;
};

/// Split, fit normalization on the training rows, train.
inline TrainResult fit(posnet::PositioningModel model, const channel::Dataset& ds, const SplitConfig& split_cfg,
                       const TrainConfig& cfg) {
  check_shapes(model, ds);
  TrainResult r;
  r.split = split_dataset(ds.size(), split_cfg);
  r.train_rows = budget_rows(ds, r.split.train, cfg);
  fit_normalization(model, ds, r.train_rows);
  const TrainingSet train_set = make_set(model, ds, r.train_rows);
  const TrainingSet val_set = make_set(model, ds, r.split.val);
  r.history = train_cached(model, train_set, val_set, cfg);
  r.model = std::move(model);
  return r;
}

/// Fine-tunes a pretrained model on a new deployment.
///
/// The first `freeze_boundary` parameterized layers are frozen; the rest keep
/// their pretrained values as a warm start. Exactly `n_samples` rows are drawn
/// from the new training split. Input statistics are refitted on those rows.
inline TrainResult transfer_train(const posnet::PositioningModel& pretrained, const channel::Dataset& ds,
                                  std::size_t n_samples, std::size_t freeze_boundary, const SplitConfig& split_cfg,
                                  TrainConfig cfg) {
  check_shapes(pretrained, ds);
  if (n_samples == 0) throw ConfigError("transfer: sample budget must be >= 1");
  posnet::PositioningModel model = pretrained;
  posnet::split_for_transfer(model.net, freeze_boundary);
  cfg.sample_budget = n_samples;
  return fit(std::move(model), ds, split_cfg, cfg);
}

}  // namespace csipos::trainer
