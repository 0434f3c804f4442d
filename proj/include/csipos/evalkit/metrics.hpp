#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "csipos/channel/types.hpp"
#include "csipos/error.hpp"

namespace csipos::evalkit {

using channel::Position;

struct MeanError {
  double me_mm = 0.0;
  double me_lambda = 0.0;
};

inline std::vector<double> euclidean_errors(std::span<const Position> predictions, std::span<const Position> truths) {
  if (predictions.size() != truths.size()) {
    throw DataError("mean_error: " + std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw DataError("mean_error: no samples");
  std::vector<double> e(predictions.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::hypot(predictions[i].x - truths[i].x, predictions[i].y - truths[i].y);
  }
  return e;
}

/// Summed in index order so repeated evaluation is bit-stable.
inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline MeanError mean_error(std::span<const Position> predictions, std::span<const Position> truths,
                            double wavelength_mm = channel::kSpeedOfLightMmPerS / 2.61e9) {
  const auto e = euclidean_errors(predictions, truths);
  const double me = mean(e);
  return {me, me / wavelength_mm};
}

struct CdfPoint {
  double error_mm = 0.0;
  double fraction = 0.0;
};

/// Empirical CDF with one step per distinct error value.
inline std::vector<CdfPoint> error_cdf(std::span<const double> errors) {
  if (errors.empty()) throw DataError("error_cdf: no errors");
  std::vector<double> s(errors.begin(), errors.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i + 1] == s[i]) continue;
    out.push_back({s[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

/// Fraction of errors <= q (right-continuous).
inline double cdf_at(std::span<const double> errors, double q) {
  if (errors.empty()) throw DataError("error_cdf: no errors");
  std::size_t c = 0;
  for (double e : errors) c += e <= q ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(errors.size());
}

/// CDF sampled on 0, r, 2r, ... up to the first grid point at or above the maximum error.
inline std::vector<CdfPoint> error_cdf_grid(std::span<const double> errors, double resolution_mm) {
  if (errors.empty()) throw DataError("error_cdf: no errors");
  if (!(resolution_mm > 0.0)) throw ConfigError("error_cdf: resolution must be > 0");
  std::vector<double> s(errors.begin(), errors.end());
  std::sort(s.begin(), s.end());
  const auto steps = static_cast<std::size_t>(std::ceil(s.back() / resolution_mm));
  std::vector<CdfPoint> out;
  std::size_t c = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double q = static_cast<double>(i) * resolution_mm;
    while (c < s.size() && s[c] <= q) ++c;
    out.push_back({q, static_cast<double>(c) / static_cast<double>(s.size())});
  }
  return out;
}

}  // namespace csipos::evalkit
