#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "csipos/error.hpp"
#include "csipos/numerics/rng.hpp"

namespace csipos::trainer {

struct SplitConfig {
  double train_frac = 0.85;
  double val_frac = 0.10;
  double test_frac = 0.05;
  std::uint64_t seed = 1;

  void validate() const {
    if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0) throw ConfigError("split: fractions must be >= 0");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
      throw ConfigError("split: fractions must sum to 1");
    }
  }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded Fisher-Yates shuffle of 0..n-1, then contiguous cuts.
///
/// Sizes: train = round(train_frac * n), val = round(val_frac * n), and test
/// takes the remainder, so the three always partition the n indices.
inline Split split_dataset(std::size_t n, const SplitConfig& cfg) {
  cfg.validate();
  if (n == 0) throw DataError("split: empty dataset");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  numerics::Rng rng(cfg.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_frac * static_cast<double>(n)));
  if (n_train + n_val >= n || n_train == 0 || n_val == 0) {
    throw DataError("split: " + std::to_string(n) + " samples leave an empty train, validation or test split");
  }
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

/// Seeded uniform draw of exactly `count` entries without replacement.
inline std::vector<std::size_t> draw_subset(const std::vector<std::size_t>& pool, std::size_t count,
                                            std::uint64_t seed) {
  if (count == 0) throw ConfigError("sample budget must be >= 1");
  if (count > pool.size()) {
    throw ConfigError("sample budget " + std::to_string(count) + " exceeds the " + std::to_string(pool.size()) +
                      " available training samples");
  }
  std::vector<std::size_t> v = pool;
  numerics::Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots end up uniformly drawn.
  for (std::size_t i = 0; i < count; ++i) std::swap(v[i], v[i + rng.below(v.size() - i)]);
  v.resize(count);
  return v;
}

}  // namespace csipos::trainer
