#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "csipos/channel/simulator.hpp"

using namespace csipos;
using namespace csipos::channel;

TEST(Radio, SubcarrierEndpointsAndSpacing) {
  RadioConfig r;
  r.subcarriers = 2;
  auto f = subcarrier_frequencies(r);
  EXPECT_EQ(f[0], 2.600e9);
  EXPECT_EQ(f[1], 2.620e9);
  r.subcarriers = 3;
  EXPECT_EQ(subcarrier_frequencies(r)[1], r.fc_hz);
  r.subcarriers = 100;
  f = subcarrier_frequencies(r);
  for (std::size_t k = 1; k < f.size(); ++k) EXPECT_NEAR(f[k] - f[k - 1], 20e6 / 99, 1e-4);
  EXPECT_EQ(f.back(), 2.620e9);
  r.subcarriers = 1;
  EXPECT_THROW(subcarrier_frequencies(r), ConfigError);
}

TEST(Radio, WavelengthIsSpeedOfLightOverCarrier) {
  RadioConfig r;
  EXPECT_DOUBLE_EQ(r.wavelength_mm(), 299792458.0 * 1000.0 / 2.61e9);
  EXPECT_NEAR(r.wavelength_mm(), 114.86, 0.005);
  EXPECT_EQ(kQuotedWavelengthMm, 114.56);
}

TEST(Topology, UraIsEightByEightAtSeventyMillimetres) {
  const Topology t = build_topology(TopologyKind::ura);
  ASSERT_EQ(t.elements.size(), 64u);
  double x0 = 1e9, x1 = -1e9, z0 = 1e9, z1 = -1e9;
  for (const auto& e : t.elements) {
    x0 = std::min(x0, e.x), x1 = std::max(x1, e.x), z0 = std::min(z0, e.z), z1 = std::max(z1, e.z);
    EXPECT_EQ(e.y, 0.0);
  }
  EXPECT_DOUBLE_EQ(x1 - x0, 490.0);
  EXPECT_DOUBLE_EQ(z1 - z0, 490.0);
  EXPECT_DOUBLE_EQ(z0, 930.0);
  EXPECT_DOUBLE_EQ(distance(t.elements[0], t.elements[1]), 70.0);
  EXPECT_DOUBLE_EQ(distance(t.elements[0], t.elements[8]), 70.0);
}

TEST(Topology, UlaIsCollinearOverFortyFourTenMillimetres) {
  const Topology t = build_topology(TopologyKind::ula);
  ASSERT_EQ(t.elements.size(), 64u);
  EXPECT_DOUBLE_EQ(t.elements.back().x - t.elements.front().x, 4410.0);
  for (const auto& e : t.elements) {
    EXPECT_EQ(e.y, 0.0);
    EXPECT_EQ(e.z, 930.0);
  }
}

TEST(Topology, DistributedIsEightGroupsOfEight) {
  GeometryConfig geo;
  const Topology t = build_topology(TopologyKind::dis, geo);
  ASSERT_EQ(t.elements.size(), 64u);
  const Area box = bounding_area(user_areas(geo));
  for (std::size_t g = 0; g < 8; ++g) {
    for (std::size_t i = 1; i < 8; ++i) {
      EXPECT_NEAR(distance(t.elements[g * 8 + i], t.elements[g * 8 + i - 1]), 70.0, 1e-9);
    }
    // every group sits outside the user area
    for (std::size_t i = 0; i < 8; ++i) EXPECT_FALSE(box.contains({t.elements[g * 8 + i].x, t.elements[g * 8 + i].y}));
  }
}

TEST(Topology, ParseKind) {
  EXPECT_EQ(parse_topology_kind("ula"), TopologyKind::ula);
  EXPECT_THROW(parse_topology_kind("ring"), ConfigError);
}

TEST(Synth, ScalarOracleOnAxis) {
  Topology t;
  t.elements = {{0, 0, 200}};
  RadioConfig r;
  r.subcarriers = 3;  // middle subcarrier sits exactly on fc
  const CsiSample s = synth_csi(t, r, {0, 1000}, 0, 200);
  const double lambda = 299792458000.0 / 2.61e9;
  const std::complex<double> h = s.H[1];
  EXPECT_NEAR(std::abs(h), lambda / (4 * std::numbers::pi * 1000.0), 1e-15);
  const double frac = 1000.0 / lambda - std::floor(1000.0 / lambda);
  const double want = std::remainder(-2 * std::numbers::pi * frac, 2 * std::numbers::pi);
  EXPECT_NEAR(std::remainder(std::arg(h) - want, 2 * std::numbers::pi), 0.0, 1e-12);
}

TEST(Synth, MatchesFreeSpaceFormulaEverywhere) {
  const Topology t = build_topology(TopologyKind::ura);
  RadioConfig r;
  const CsiSample s = synth_csi(t, r, {123.0, 1456.0}, 3);
  const auto f = subcarrier_frequencies(r);
  for (std::size_t n = 0; n < 64; ++n)
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double d = std::sqrt(std::pow(t.elements[n].x - 123.0, 2) + std::pow(t.elements[n].y - 1456.0, 2) +
                                 std::pow(t.elements[n].z - 200.0, 2));
      const double c = 299792458000.0;
      const std::complex<double> want = (c / f[k]) / (4 * std::numbers::pi * d) *
                                        std::exp(std::complex<double>(0, -2 * std::numbers::pi * f[k] * d / c));
      EXPECT_NEAR(std::abs(s.H[n * f.size() + k] - want), 0.0, 1e-12 * std::abs(want));
    }
}

TEST(Synth, SymmetricElementsGiveIdenticalRows) {
  const Topology t = build_topology(TopologyKind::ula);
  RadioConfig r;
  const CsiSample s = synth_csi(t, r, {0, 1600}, 0);
  const std::size_t K = r.subcarriers;
  for (std::size_t n = 0; n < 32; ++n)
    for (std::size_t k = 0; k < K; ++k) EXPECT_EQ(s.H[n * K + k], s.H[(63 - n) * K + k]);
}

TEST(Synth, AmplitudeHalvesWithDoubledDistance) {
  Topology t;
  t.elements = {{0, 0, 200}};
  RadioConfig r;
  const auto a = synth_csi(t, r, {0, 700}, 0);
  const auto b = synth_csi(t, r, {0, 1400}, 0);
  for (std::size_t k = 0; k < r.subcarriers; ++k) EXPECT_NEAR(std::abs(a.H[k]) / std::abs(b.H[k]), 2.0, 1e-12);
}

TEST(Synth, FarBroadsideUlaHasFlatPhaseAcrossCentre) {
  const Topology t = build_topology(TopologyKind::ula);
  RadioConfig r;
  r.subcarriers = 3;
  const auto s = synth_csi(t, r, {0, 1e8}, 0, 930);
  // centre pair is exactly symmetric; neighbours differ by far less than a radian
  EXPECT_EQ(s.H[31 * 3 + 1], s.H[32 * 3 + 1]);
  for (std::size_t n = 24; n < 40; ++n) EXPECT_LT(std::abs(std::arg(s.H[n * 3 + 1] / s.H[(n + 1) * 3 + 1])), 1e-3);
}

TEST(Synth, SingularityIsError) {
  Topology t;
  t.elements = {{10, 20, 200}};
  EXPECT_THROW(synth_csi(t, {}, {10, 20}, 0, 200), NumericError);
}

TEST(Synth, NoiseHitsRequestedSnr) {
  const Topology t = build_topology(TopologyKind::ura);
  RadioConfig clean, noisy;
  noisy.noise_snr_db = 20.0;
  const auto ref = synth_csi(t, clean, {100, 1500}, 0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = synth_csi(t, noisy, {100, 1500}, seed);
    double sig = 0, err = 0;
    for (std::size_t i = 0; i < s.H.size(); ++i) sig += std::norm(ref.H[i]), err += std::norm(s.H[i] - ref.H[i]);
    EXPECT_NEAR(10 * std::log10(sig / err), 20.0, 1.0) << "seed " << seed;
  }
}

TEST(Synth, AmplitudeIndependentOfSeedWithoutNoise) {
  const Topology t = build_topology(TopologyKind::ura);
  EXPECT_EQ(synth_csi(t, {}, {5, 1100}, 1).H, synth_csi(t, {}, {5, 1100}, 99).H);
}

TEST(Grid, CountsAndOrder) {
  GeometryConfig geo;
  geo.area_size_mm = 100;
  const auto ds = generate_grid_dataset(build_topology(TopologyKind::ura, geo), {}, geo, {50}, 0);
  ASSERT_EQ(ds.size(), 9u);
  EXPECT_EQ(ds.samples[0].position.x, -50.0);
  EXPECT_EQ(ds.samples[0].position.y, 1000.0);
  EXPECT_EQ(ds.samples[1].position.x, 0.0);
  EXPECT_EQ(ds.samples[3].position.y, 1050.0);
  for (const auto& s : ds.samples) EXPECT_TRUE(user_areas(geo)[0].contains(s.position));
}

TEST(Grid, FullCampaignCount) {
  GeometryConfig geo;
  geo.n_areas = 4;
  const auto areas = user_areas(geo);
  ASSERT_EQ(areas.size(), 4u);
  std::size_t total = 0;
  for (const auto& a : areas) total += grid_axis(a.x_min, a.width, 5).size() * grid_axis(a.y_min, a.depth, 5).size();
  EXPECT_EQ(total, 252004u);
}

TEST(Grid, DeskDefaultHas2601Nodes) {
  GeometryConfig geo;
  const auto ds = generate_grid_dataset(build_topology(TopologyKind::ura, geo), {}, geo, {}, 1);
  EXPECT_EQ(ds.size(), 2601u);
  EXPECT_EQ(ds.n_antennas, 64u);
  EXPECT_EQ(ds.n_subcarriers, 16u);
}

TEST(Grid, StepMustDivideExtent) { EXPECT_THROW(grid_axis(0, 100, 30), ConfigError); }

TEST(Grid, DeterministicAndReciprocal) {
  GeometryConfig geo;
  geo.area_size_mm = 200;
  RadioConfig r;
  r.noise_snr_db = 15;
  const auto topo = build_topology(TopologyKind::dis, geo);
  const auto a = generate_grid_dataset(topo, r, geo, {50}, 17);
  const auto b = generate_grid_dataset(topo, r, geo, {50}, 17);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].H, b.samples[i].H);

  const auto clean = generate_grid_dataset(topo, {}, geo, {50}, 17);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_EQ(synth_csi(topo, {}, clean.samples[i].position, 17 ^ i).H, clean.samples[i].H);
    EXPECT_EQ(synth_csi(topo, r, a.samples[i].position, 17 ^ i).H, a.samples[i].H);
  }
}

TEST(Grid, CloseAreaWarns) {
  GeometryConfig geo;
  geo.standoff_mm = 100;
  std::vector<std::string> warnings;
  geo.area_size_mm = 200;
  generate_grid_dataset(build_topology(TopologyKind::ura, geo), {}, geo, {100}, 0, &warnings);
  EXPECT_FALSE(warnings.empty());
}
