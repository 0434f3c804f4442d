#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "csipos/channel/simulator.hpp"
#include "csipos/datastore/binary.hpp"

namespace csipos::datastore {

inline constexpr char kDatasetMagic[4] = {'C', 'S', 'I', 'B'};
inline constexpr std::uint16_t kDatasetVersion = 1;

/// Body bytes for `count` samples of N antennas and K subcarriers.
inline std::uint64_t dataset_body_bytes(std::uint64_t count, std::uint64_t N, std::uint64_t K) {
  return count * (N * K * 16 + 16);
}

/// Layout (all little-endian):
///   "CSIB" u16 version, u16 N, u16 K, u64 count,
///   u16-length topology name, u8 topology kind, f64 element spacing,
///   u16 element count E then E x (x, y, z) f64,
///   f64 fc, f64 bandwidth, f64 user height, f64 SNR (NaN when noise-free),
///   body: per sample N*K (re, im) f64 antenna-major, then x, y f64.
inline std::vector<unsigned char> encode_dataset(const channel::Dataset& ds) {
  const std::size_t N = ds.n_antennas, K = ds.n_subcarriers;
  if (N == 0 || K == 0 || N > 0xffff || K > 0xffff) throw DataError("dataset: antenna/subcarrier counts out of range");
  ByteWriter w;
  w.raw({kDatasetMagic, 4});
  w.u16(kDatasetVersion);
  w.u16(static_cast<std::uint16_t>(N));
  w.u16(static_cast<std::uint16_t>(K));
  w.u64(ds.samples.size());
  w.str16(ds.topology_name);
  w.u8(static_cast<std::uint8_t>(ds.topology.kind));
  w.f64(ds.topology.element_spacing_mm);
  w.u16(static_cast<std::uint16_t>(ds.topology.elements.size()));
  for (const auto& e : ds.topology.elements) w.f64(e.x), w.f64(e.y), w.f64(e.z);
  w.f64(ds.radio.fc_hz);
  w.f64(ds.radio.bandwidth_hz);
  w.f64(ds.user_height_mm);
  w.f64(ds.radio.noise_snr_db ? *ds.radio.noise_snr_db : std::numeric_limits<double>::quiet_NaN());
  w.bytes().reserve(w.bytes().size() + dataset_body_bytes(ds.samples.size(), N, K));
  for (const auto& s : ds.samples) {
    if (s.H.size() != N * K) throw ShapeError("dataset: sample with " + std::to_string(s.H.size()) + " CSI entries, expected " + std::to_string(N * K));
    for (const auto& h : s.H) w.f64(h.real()), w.f64(h.imag());
    w.f64(s.position.x);
    w.f64(s.position.y);
  }
  return w.bytes();
}

inline channel::Dataset decode_dataset(const std::vector<unsigned char>& bytes, const std::string& what = "dataset") {
  ByteReader r(bytes.data(), bytes.size(), what);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kDatasetMagic, 4) != 0) {
    throw BadMagicError(what + ": not a dataset file (bad magic)");
  }
  r.raw(4);
  const std::uint16_t version = r.u16();
  if (version != kDatasetVersion) {
    throw VersionError(what + ": format version " + std::to_string(version) + ", this build reads " + std::to_string(kDatasetVersion));
  }
  channel::Dataset ds;
  ds.n_antennas = r.u16();
  ds.n_subcarriers = r.u16();
  const std::uint64_t count = r.u64();
  ds.topology_name = r.str16();
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(channel::TopologyKind::dis)) throw CorruptionError(what + ": unknown topology kind " + std::to_string(kind));
  ds.topology.kind = static_cast<channel::TopologyKind>(kind);
  ds.topology.name = channel::to_string(ds.topology.kind);
  ds.topology.element_spacing_mm = r.f64();
  const std::uint16_t n_elements = r.u16();
  for (std::uint16_t i = 0; i < n_elements; ++i) {
    channel::Point3 p;
    p.x = r.f64(), p.y = r.f64(), p.z = r.f64();
    ds.topology.elements.push_back(p);
  }
  ds.radio.fc_hz = r.f64();
  ds.radio.bandwidth_hz = r.f64();
  ds.radio.subcarriers = ds.n_subcarriers;
  ds.user_height_mm = r.f64();
  const double snr = r.f64();
  if (!std::isnan(snr)) ds.radio.noise_snr_db = snr;

  const std::size_t N = ds.n_antennas, K = ds.n_subcarriers;
  const std::uint64_t body = dataset_body_bytes(count, N, K);
  if (count != 0 && (body / count) != N * K * 16 + 16) throw CorruptionError(what + ": sample count overflows");
  if (r.remaining() < body) {
    throw TruncationError(what + ": header declares " + std::to_string(count) + " samples (" + std::to_string(body) +
                          " body bytes) but only " + std::to_string(r.remaining()) + " remain");
  }
  if (r.remaining() > body) throw CorruptionError(what + ": " + std::to_string(r.remaining() - body) + " unexpected trailing bytes");
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.H.resize(N * K);
    for (auto& h : s.H) {
      const double re = r.f64();
      h = {re, r.f64()};
    }
    s.position.x = r.f64();
    s.position.y = r.f64();
    s.user_height_mm = ds.user_height_mm;
    s.scenario = ds.topology_name;
  }
  return ds;
}

inline void write_dataset(const channel::Dataset& ds, const std::filesystem::path& path) {
  write_file(path, encode_dataset(ds));
}

inline channel::Dataset read_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file(path), path.string());
}

}  // namespace csipos::datastore
