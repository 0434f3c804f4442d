#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "csipos/datastore/binary.hpp"
#include "csipos/numerics/hash.hpp"
#include "csipos/posnet/posnet.hpp"

namespace csipos::datastore {

inline constexpr char kModelMagic[4] = {'C', 'S', 'I', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

/// Layout (all little-endian):
///   "CSIM" u16 version, u32-length architecture text, u64 architecture hash,
///   u64 seed, 6 f64 input offsets, 6 f64 input scales,
///   4 f64 label area (x_min, y_min, width, depth),
///   u32 layer count then one u8 frozen flag per layer, u64 parameter count,
///   body: parameters in layer order (kernels then biases) as f64,
///   u64 FNV-1a of every preceding byte.
inline std::vector<unsigned char> encode_model(const posnet::PositioningModel& m) {
  ByteWriter w;
  w.raw({kModelMagic, 4});
  w.u16(kModelVersion);
  const std::string arch = m.arch.serialize();
  w.str32(arch);
  w.u64(numerics::fnv1a(arch));
  w.u64(m.seed);
  for (double v : m.normalizer.offset) w.f64(v);
  for (double v : m.normalizer.scale) w.f64(v);
  const auto& a = m.label_map.area;
  w.f64(a.x_min), w.f64(a.y_min), w.f64(a.width), w.f64(a.depth);
  w.u32(static_cast<std::uint32_t>(m.net.size()));
  for (const auto& l : m.net.layers()) w.u8(l.spec.frozen ? 1 : 0);
  w.u64(m.net.param_count());
  for (const auto& l : m.net.layers())
    for (const auto& p : l.params)
      for (double v : p.values()) w.f64(v);
  numerics::Fnv1a h;
  h.update(w.bytes());
  w.u64(h.digest());
  return w.bytes();
}

/// Decodes a model file. When `expected` is given, the stored architecture
/// must match it exactly.
inline posnet::PositioningModel decode_model(const std::vector<unsigned char>& bytes, const std::string& what = "model",
                                             const std::optional<posnet::ArchConfig>& expected = std::nullopt) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw BadMagicError(what + ": not a model file (bad magic)");
  }
  if (bytes.size() < 14) throw TruncationError(what + ": truncated header");
  ByteReader r(bytes.data(), bytes.size(), what);
  r.raw(4);
  const std::uint16_t version = r.u16();
  if (version != kModelVersion) {
    throw VersionError(what + ": format version " + std::to_string(version) + ", this build reads " + std::to_string(kModelVersion));
  }
  // Whole-file checksum first, so nothing is interpreted from a damaged file.
  {
    ByteReader tail(bytes.data() + bytes.size() - 8, 8, what);
    numerics::Fnv1a h;
    h.update({bytes.data(), bytes.size() - 8});
    if (tail.u64() != h.digest()) throw CorruptionError(what + ": checksum mismatch (file is corrupted or truncated)");
  }
  ByteReader body(bytes.data(), bytes.size() - 8, what);
  body.raw(6);
  const std::string arch_text = body.str32();
  const std::uint64_t arch_hash = body.u64();
  if (numerics::fnv1a(arch_text) != arch_hash) throw CorruptionError(what + ": architecture hash does not match its text");
  posnet::ArchConfig arch;
  try {
    arch = posnet::ArchConfig::deserialize(arch_text);
  } catch (const Error& e) {
    throw CorruptionError(what + ": unreadable architecture: " + e.what());
  }
  if (expected && expected->hash() != arch_hash) {
    throw ConfigError(what + ": architecture hash " + std::to_string(arch_hash) + " differs from the expected " +
                      std::to_string(expected->hash()) + "; the file was trained for a different network layout");
  }
  const std::uint64_t seed = body.u64();
  posnet::PositioningModel m = posnet::build_positioning_cnn(arch, seed);
  for (double& v : m.normalizer.offset) v = body.f64();
  for (double& v : m.normalizer.scale) v = body.f64();
  auto& a = m.label_map.area;
  a.x_min = body.f64(), a.y_min = body.f64(), a.width = body.f64(), a.depth = body.f64();
  const std::uint32_t n_layers = body.u32();
  if (n_layers != m.net.size()) {
    throw CorruptionError(what + ": " + std::to_string(n_layers) + " layers stored, architecture has " + std::to_string(m.net.size()));
  }
  for (auto& l : m.net.layers()) l.spec.frozen = body.u8() != 0;
  const std::uint64_t count = body.u64();
  if (count != m.net.param_count()) {
    throw CorruptionError(what + ": declares " + std::to_string(count) + " parameters, architecture has " +
                          std::to_string(m.net.param_count()));
  }
  if (body.remaining() != count * 8) {
    throw TruncationError(what + ": parameter body is " + std::to_string(body.remaining()) + " bytes, expected " +
                          std::to_string(count * 8));
  }
  for (auto& l : m.net.layers())
    for (auto& p : l.params)
      for (double& v : p.storage()) v = body.f64();
  return m;
}

inline void save_model(const posnet::PositioningModel& m, const std::filesystem::path& path) {
  write_file(path, encode_model(m));
}

inline posnet::PositioningModel load_model(const std::filesystem::path& path,
                                           const std::optional<posnet::ArchConfig>& expected = std::nullopt) {
  return decode_model(read_file(path), path.string(), expected);
}

}  // namespace csipos::datastore
