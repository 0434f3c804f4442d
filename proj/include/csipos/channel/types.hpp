#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csipos/error.hpp"

namespace csipos::channel {

/// Speed of light in mm/s.
inline constexpr double kSpeedOfLightMmPerS = 299'792'458'000.0;
/// Wavelength quoted alongside the 2.61 GHz carrier in the measurement
/// campaign. It disagrees with c / fc (114.86 mm); reported, never used.
inline constexpr double kQuotedWavelengthMm = 114.56;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

/// Horizontal user position in mm, frame centred on the URA.
struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct RadioConfig {
  double fc_hz = 2.61e9;
  double bandwidth_hz = 20e6;
  std::size_t subcarriers = 16;
  std::optional<double> noise_snr_db;

  double wavelength_mm() const { return kSpeedOfLightMmPerS / fc_hz; }

  void validate() const {
    if (subcarriers < 2) throw ConfigError("radio: subcarrier count must be >= 2");
    if (!(fc_hz > 0.0) || !(bandwidth_hz > 0.0) || bandwidth_hz >= 2.0 * fc_hz) {
      throw ConfigError("radio: need 0 < bandwidth < 2 fc");
    }
  }
};

/// f_k = fc - BW/2 + k BW/(K-1), k = 0..K-1.
inline std::vector<double> subcarrier_frequencies(const RadioConfig& radio) {
  radio.validate();
  const std::size_t K = radio.subcarriers;
  std::vector<double> f(K);
  const double start = radio.fc_hz - radio.bandwidth_hz / 2.0;
  const double spacing = radio.bandwidth_hz / static_cast<double>(K - 1);
  for (std::size_t k = 0; k < K; ++k) f[k] = start + static_cast<double>(k) * spacing;
  f[K - 1] = radio.fc_hz + radio.bandwidth_hz / 2.0;
  return f;
}

/// One channel snapshot. H is antenna-major: H[n * K + k].
struct CsiSample {
  std::vector<std::complex<double>> H;
  Position position;
  double user_height_mm = 200.0;
  std::string scenario;
  std::uint64_t seed = 0;
};

/// Axis-aligned rectangle in the horizontal plane (mm).
struct Area {
  double x_min = -625.0;
  double y_min = 1000.0;
  double width = 1250.0;
  double depth = 1250.0;

  double x_max() const { return x_min + width; }
  double y_max() const { return y_min + depth; }
  bool contains(const Position& p, double tol = 1e-9) const {
    return p.x >= x_min - tol && p.x <= x_max() + tol && p.y >= y_min - tol && p.y <= y_max() + tol;
  }
  friend bool operator==(const Area&, const Area&) = default;
};

}  // namespace csipos::channel
