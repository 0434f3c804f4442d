#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "csipos/channel/simulator.hpp"
#include "csipos/datastore/binary.hpp"
#include "csipos/datastore/config.hpp"

namespace csipos::datastore {

/// Converts externally recorded CSI into a Dataset.
///
/// The sidecar is a `key = value` text file:
///   n_antennas, n_subcarriers, count   (required)
///   data    raw file, relative to the sidecar (required)
///   labels  text file with one "x y" pair in mm per sample (required)
///   name, fc_hz, bandwidth_hz, user_height_mm   (optional)
/// The raw file holds count * N * K complex values as little-endian f64
/// (re, im) pairs, antenna-major, with no header.
inline channel::Dataset import_raw(const std::filesystem::path& sidecar) {
  std::ifstream f(sidecar);
  if (!f) throw DataError("cannot open sidecar " + sidecar.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = sidecar.string() + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(detail::trim(t.substr(0, eq)));
    static const char* known[] = {"n_antennas", "n_subcarriers", "count", "data", "labels",
                                  "name", "fc_hz", "bandwidth_hz", "user_height_mm"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    if (!kv.emplace(key, std::string(detail::trim(t.substr(eq + 1)))).second) {
      throw ConfigError(where + ": key '" + key + "' set twice");
    }
  }
  auto require = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError(sidecar.string() + ": missing key '" + k + "'");
    return it->second;
  };
  auto as_size = [&](const std::string& k) {
    std::size_t v = 0;
    if (!detail::parse_number(require(k), v)) throw ConfigError(sidecar.string() + ": key '" + k + "' expects an integer");
    return v;
  };
  auto as_double = [&](const std::string& k, double fallback) {
    if (!kv.count(k)) return fallback;
    double v = 0;
    if (!detail::parse_number(kv[k], v)) throw ConfigError(sidecar.string() + ": key '" + k + "' expects a number");
    return v;
  };

  channel::Dataset ds;
  ds.n_antennas = as_size("n_antennas");
  ds.n_subcarriers = as_size("n_subcarriers");
  const std::size_t count = as_size("count");
  if (ds.n_antennas == 0 || ds.n_subcarriers == 0) throw ConfigError(sidecar.string() + ": N and K must be >= 1");
  ds.topology_name = kv.count("name") ? kv["name"] : "imported";
  ds.topology.name = ds.topology_name;
  ds.radio.fc_hz = as_double("fc_hz", ds.radio.fc_hz);
  ds.radio.bandwidth_hz = as_double("bandwidth_hz", ds.radio.bandwidth_hz);
  ds.radio.subcarriers = ds.n_subcarriers;
  ds.user_height_mm = as_double("user_height_mm", ds.user_height_mm);

  const auto base = sidecar.parent_path();
  const auto raw = read_file(base / require("data"));
  const std::size_t NK = ds.n_antennas * ds.n_subcarriers;
  if (raw.size() != count * NK * 16) {
    throw TruncationError("raw CSI file has " + std::to_string(raw.size()) + " bytes, sidecar implies " +
                          std::to_string(count * NK * 16));
  }
  std::ifstream lf(base / require("labels"));
  if (!lf) throw DataError("cannot open label file " + (base / require("labels")).string());
  ByteReader r(raw.data(), raw.size(), "raw CSI");
  ds.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = ds.samples[i];
    s.H.resize(NK);
    for (auto& h : s.H) {
      const double re = r.f64();
      h = {re, r.f64()};
    }
    if (!(lf >> s.position.x >> s.position.y)) {
      throw TruncationError("label file ends after " + std::to_string(i) + " of " + std::to_string(count) + " samples");
    }
    s.user_height_mm = ds.user_height_mm;
    s.scenario = ds.topology_name;
  }
  return ds;
}

}  // namespace csipos::datastore
