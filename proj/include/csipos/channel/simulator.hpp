#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "csipos/channel/topology.hpp"
#include "csipos/channel/types.hpp"
#include "csipos/numerics/rng.hpp"

namespace csipos::channel {

/// A collection of snapshots sharing one topology and radio configuration.
/// Element coordinates are only known for simulated data; a dataset read
/// from disk carries the topology name alone.
struct Dataset {
  std::string topology_name;
  Topology topology;
  RadioConfig radio;
  double user_height_mm = 200.0;
  std::size_t n_antennas = 0;
  std::size_t n_subcarriers = 0;
  std::vector<CsiSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Line-of-sight free-space channel:
///
///   H[n,k] = lambda_k / (4 pi d_n) * exp(-j 2 pi f_k d_n / c)
///
/// d_n is the 3D distance from element n to the user antenna. With a noise
/// SNR configured, complex white Gaussian noise of power mean|H|^2 / 10^(snr/10)
/// is added, drawn from `seed`.
inline CsiSample synth_csi(const Topology& topology, const RadioConfig& radio, Position user,
                           std::uint64_t seed, double user_height_mm = 200.0) {
  const std::vector<double> freqs = subcarrier_frequencies(radio);
  const std::size_t N = topology.elements.size(), K = freqs.size();
  const Point3 ue{user.x, user.y, user_height_mm};
  CsiSample s;
  s.position = user;
  s.user_height_mm = user_height_mm;
  s.scenario = topology.name;
  s.seed = seed;
  s.H.resize(N * K);
  for (std::size_t n = 0; n < N; ++n) {
    const double d = distance(topology.elements[n], ue);
    if (!(d > 0.0)) {
      throw NumericError("synth_csi: user position coincides with antenna element " + std::to_string(n));
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double lambda = kSpeedOfLightMmPerS / freqs[k];
      const double amplitude = lambda / (4.0 * std::numbers::pi * d);
      const double cycles = d / lambda;
      const double phase = -2.0 * std::numbers::pi * (cycles - std::floor(cycles));
      s.H[n * K + k] = std::polar(amplitude, phase);
    }
  }
  if (radio.noise_snr_db) {
    double power = 0.0;
    for (const auto& h : s.H) power += std::norm(h);
    power /= static_cast<double>(s.H.size());
    const double sigma = std::sqrt(power / std::pow(10.0, *radio.noise_snr_db / 10.0) / 2.0);
    numerics::Rng rng(seed);
    for (auto& h : s.H) h += std::complex<double>(sigma * rng.normal(), sigma * rng.normal());
  }
  return s;
}

struct GridConfig {
  double step_mm = 25.0;
};

/// Node coordinates along one axis: start, start + step, ..., start + extent.
inline std::vector<double> grid_axis(double start, double extent, double step) {
  if (!(step > 0.0)) throw ConfigError("grid: step must be > 0");
  const double ratio = extent / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("grid: step " + std::to_string(step) + " mm does not divide extent " +
                      std::to_string(extent) + " mm");
  }
  const auto n = static_cast<std::size_t>(rounded) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + static_cast<double>(i) * step;
  return v;
}

/// One snapshot per grid node of every user area, in area / row (y) / column
/// (x) order. Node i draws its noise from seed ^ i.
inline Dataset generate_grid_dataset(const Topology& topology, const RadioConfig& radio,
                                     const GeometryConfig& geo, const GridConfig& grid,
                                     std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  radio.validate();
  Dataset ds;
  ds.topology_name = topology.name;
  ds.topology = topology;
  ds.radio = radio;
  ds.user_height_mm = geo.user_height_mm;
  ds.n_antennas = topology.elements.size();
  ds.n_subcarriers = radio.subcarriers;

  double closest = std::numeric_limits<double>::infinity();
  std::uint64_t index = 0;
  for (const Area& area : user_areas(geo)) {
    const auto xs = grid_axis(area.x_min, area.width, grid.step_mm);
    const auto ys = grid_axis(area.y_min, area.depth, grid.step_mm);
    for (double y : ys) {
      for (double x : xs) {
        ds.samples.push_back(synth_csi(topology, radio, {x, y}, seed ^ index, geo.user_height_mm));
        ++index;
        for (const Point3& e : topology.elements) {
          closest = std::min(closest, std::hypot(e.x - x, e.y - y));
        }
      }
    }
  }
  // The campaign kept users at least a metre from the array.
  const double comfort = 0.5 * GeometryConfig{}.standoff_mm;
  if (warnings && closest < comfort) {
    warnings->push_back("grid node lies " + std::to_string(closest) + " mm (horizontal) from an antenna element, under " +
                        std::to_string(comfort) + " mm; the area is closer to the array than the measured setup");
  }
  return ds;
}

}  // namespace csipos::channel
