#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "csipos/channel/simulator.hpp"
#include "csipos/error.hpp"

namespace csipos::evalkit {

enum class SubsampleStrategy { even, contiguous };

inline std::string to_string(SubsampleStrategy s) { return s == SubsampleStrategy::even ? "even" : "contiguous"; }

inline SubsampleStrategy parse_subsample_strategy(std::string_view s) {
  if (s == "even") return SubsampleStrategy::even;
  if (s == "contiguous") return SubsampleStrategy::contiguous;
  throw ConfigError("unknown antenna subsampling strategy '" + std::string(s) + "' (expected even or contiguous)");
}

/// even: every (N/n)-th antenna starting at 0. contiguous: the first n.
inline std::vector<std::size_t> subsample_indices(std::size_t N, std::size_t n, SubsampleStrategy strategy) {
  if (n == 0 || n > N) {
    throw ConfigError("cannot keep " + std::to_string(n) + " of " + std::to_string(N) + " antennas");
  }
  if (N % n != 0) throw ConfigError(std::to_string(n) + " does not divide the antenna count " + std::to_string(N));
  std::vector<std::size_t> idx(n);
  const std::size_t stride = strategy == SubsampleStrategy::even ? N / n : 1;
  for (std::size_t i = 0; i < n; ++i) idx[i] = i * stride;
  return idx;
}

inline channel::Dataset antenna_subsample(const channel::Dataset& ds, std::size_t n,
                                          SubsampleStrategy strategy = SubsampleStrategy::even) {
  const auto idx = subsample_indices(ds.n_antennas, n, strategy);
  if (n == ds.n_antennas) return ds;
  const std::size_t K = ds.n_subcarriers;
  channel::Dataset out = ds;
  out.topology = channel::select_elements(ds.topology, idx);
  out.topology_name = ds.topology_name + "-" + std::to_string(n) + to_string(strategy);
  out.n_antennas = n;
  for (auto& s : out.samples) {
    std::vector<std::complex<double>> H(n * K);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t k = 0; k < K; ++k) H[a * K + k] = s.H[idx[a] * K + k];
    }
    s.H = std::move(H);
  }
  return out;
}

}  // namespace csipos::evalkit
