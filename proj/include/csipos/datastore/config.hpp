#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "csipos/channel/simulator.hpp"
#include "csipos/channel/topology.hpp"
#include "csipos/error.hpp"
#include "csipos/evalkit/subsample.hpp"
#include "csipos/numerics/hash.hpp"
#include "csipos/trainer/trainer.hpp"

namespace csipos::datastore {

/// Everything a simulate/train/transfer/eval run depends on.
struct RunConfig {
  // radio
  double fc_hz = 2.61e9;
  double bandwidth_hz = 20e6;
  std::size_t subcarriers = 16;
  std::optional<double> snr_db;
  // scene
  channel::TopologyKind topology = channel::TopologyKind::ura;
  std::size_t antennas = 64;
  evalkit::SubsampleStrategy subsample = evalkit::SubsampleStrategy::even;
  double standoff_mm = 1000.0;
  double lowest_element_mm = 930.0;
  double spacing_mm = 70.0;
  double user_height_mm = 200.0;
  double area_size_mm = 1250.0;
  std::size_t n_areas = 1;
  double area_gap_mm = 200.0;
  double grid_step_mm = 25.0;
  std::uint64_t data_seed = 7;
  // model and training
  std::uint64_t seed = 1;
  double dropout = 0.0;
  double split_train = 0.85;
  double split_val = 0.10;
  double split_test = 0.05;
  std::uint64_t split_seed = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t patience = 20;
  std::size_t lr_decay_every = 10;
  double lr_decay_factor = 0.5;
  // transfer
  std::size_t budget = 0;           // 0 = whole training split
  std::size_t freeze_boundary = 0;  // 0 = end of stage 1
  trainer::SubsetStrategy subset = trainer::SubsetStrategy::uniform;
  // evaluation
  double cdf_resolution_mm = 0.0;  // 0 = one step per distinct error
  std::string letters_text = "KU LEUVEN";
  double letters_spacing_mm = 25.0;

  channel::RadioConfig radio() const {
    channel::RadioConfig r;
    r.fc_hz = fc_hz, r.bandwidth_hz = bandwidth_hz, r.subcarriers = subcarriers, r.noise_snr_db = snr_db;
    return r;
  }
  channel::GeometryConfig geometry() const {
    channel::GeometryConfig g;
    g.standoff_mm = standoff_mm, g.lowest_element_mm = lowest_element_mm, g.spacing_mm = spacing_mm;
    g.user_height_mm = user_height_mm, g.area_size_mm = area_size_mm, g.n_areas = n_areas, g.area_gap_mm = area_gap_mm;
    return g;
  }
  channel::GridConfig grid() const { return {grid_step_mm}; }
  trainer::SplitConfig split() const { return {split_train, split_val, split_test, split_seed}; }
  trainer::TrainConfig training() const {
    trainer::TrainConfig t;
    t.epochs = epochs, t.batch_size = batch_size, t.patience = patience;
    t.adam.lr = lr, t.adam.beta1 = beta1, t.adam.beta2 = beta2, t.adam.epsilon = epsilon;
    t.lr_decay_every = lr_decay_every, t.lr_decay_factor = lr_decay_factor;
    t.seed = seed;
    if (budget > 0) t.sample_budget = budget;
    t.subset = subset;
    return t;
  }

  void validate() const {
    radio().validate();
    split().validate();
    training().validate();
    if (antennas == 0) throw ConfigError("antennas must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (n_areas != 1 && n_areas != 4) throw ConfigError("n_areas must be 1 or 4");
    if (!(grid_step_mm > 0.0)) throw ConfigError("grid_step_mm must be > 0");
    if (!(letters_spacing_mm > 0.0)) throw ConfigError("letters_spacing_mm must be > 0");
    if (cdf_resolution_mm < 0.0) throw ConfigError("cdf_resolution_mm must be >= 0");
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    // strtod accepts forms like 2.61e9 and 1e-3 uniformly
    std::string tmp(s);
    char* stop = nullptr;
    out = std::strtod(tmp.c_str(), &stop);
    return !tmp.empty() && stop == tmp.c_str() + tmp.size() && std::isfinite(out);
  } else {
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
  }
}

struct Field {
  std::string type;
  std::function<bool(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number(T RunConfig::*m) {
  return {std::is_floating_point_v<T> ? "a number" : "a non-negative integer",
          [m](RunConfig& c, std::string_view v) { return parse_number(v, c.*m); },
          [m](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*m);
            else return std::to_string(c.*m);
          }};
}

inline const std::vector<std::pair<std::string, Field>>& schema() {
  static const std::vector<std::pair<std::string, Field>> s = [] {
    std::vector<std::pair<std::string, Field>> f;
    f.push_back({"fc_hz", number(&RunConfig::fc_hz)});
    f.push_back({"bandwidth_hz", number(&RunConfig::bandwidth_hz)});
    f.push_back({"subcarriers", number(&RunConfig::subcarriers)});
    f.push_back({"snr_db",
                 {"a number or 'none'",
                  [](RunConfig& c, std::string_view v) {
                    if (v == "none") return c.snr_db.reset(), true;
                    double d;
                    if (!parse_number(v, d)) return false;
                    c.snr_db = d;
                    return true;
                  },
                  [](const RunConfig& c) { return c.snr_db ? fmt_double(*c.snr_db) : std::string("none"); }}});
    f.push_back({"topology",
                 {"one of ura, ula, dis",
                  [](RunConfig& c, std::string_view v) {
                    if (v == "ura") c.topology = channel::TopologyKind::ura;
                    else if (v == "ula") c.topology = channel::TopologyKind::ula;
                    else if (v == "dis") c.topology = channel::TopologyKind::dis;
                    else return false;
                    return true;
                  },
                  [](const RunConfig& c) {
                    std::string s = channel::to_string(c.topology);
                    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                    return s;
                  }}});
    f.push_back({"antennas", number(&RunConfig::antennas)});
    f.push_back({"subsample",
                 {"one of even, contiguous",
                  [](RunConfig& c, std::string_view v) {
                    if (v == "even") c.subsample = evalkit::SubsampleStrategy::even;
                    else if (v == "contiguous") c.subsample = evalkit::SubsampleStrategy::contiguous;
                    else return false;
                    return true;
                  },
                  [](const RunConfig& c) { return evalkit::to_string(c.subsample); }}});
    f.push_back({"standoff_mm", number(&RunConfig::standoff_mm)});
    f.push_back({"lowest_element_mm", number(&RunConfig::lowest_element_mm)});
    f.push_back({"spacing_mm", number(&RunConfig::spacing_mm)});
    f.push_back({"user_height_mm", number(&RunConfig::user_height_mm)});
    f.push_back({"area_size_mm", number(&RunConfig::area_size_mm)});
    f.push_back({"n_areas", number(&RunConfig::n_areas)});
    f.push_back({"area_gap_mm", number(&RunConfig::area_gap_mm)});
    f.push_back({"grid_step_mm", number(&RunConfig::grid_step_mm)});
    f.push_back({"data_seed", number(&RunConfig::data_seed)});
    f.push_back({"seed", number(&RunConfig::seed)});
    f.push_back({"dropout", number(&RunConfig::dropout)});
    f.push_back({"split_train", number(&RunConfig::split_train)});
    f.push_back({"split_val", number(&RunConfig::split_val)});
    f.push_back({"split_test", number(&RunConfig::split_test)});
    f.push_back({"split_seed", number(&RunConfig::split_seed)});
    f.push_back({"epochs", number(&RunConfig::epochs)});
    f.push_back({"batch_size", number(&RunConfig::batch_size)});
    f.push_back({"lr", number(&RunConfig::lr)});
    f.push_back({"beta1", number(&RunConfig::beta1)});
    f.push_back({"beta2", number(&RunConfig::beta2)});
    f.push_back({"epsilon", number(&RunConfig::epsilon)});
    f.push_back({"patience", number(&RunConfig::patience)});
    f.push_back({"lr_decay_every", number(&RunConfig::lr_decay_every)});
    f.push_back({"lr_decay_factor", number(&RunConfig::lr_decay_factor)});
    f.push_back({"budget", number(&RunConfig::budget)});
    f.push_back({"freeze_boundary", number(&RunConfig::freeze_boundary)});
    f.push_back({"subset",
                 {"one of uniform, stratified",
                  [](RunConfig& c, std::string_view v) {
                    if (v == "uniform") c.subset = trainer::SubsetStrategy::uniform;
                    else if (v == "stratified") c.subset = trainer::SubsetStrategy::stratified;
                    else return false;
                    return true;
                  },
                  [](const RunConfig& c) {
                    return std::string(c.subset == trainer::SubsetStrategy::uniform ? "uniform" : "stratified");
                  }}});
    f.push_back({"cdf_resolution_mm", number(&RunConfig::cdf_resolution_mm)});
    f.push_back({"letters_text",
                 {"text", [](RunConfig& c, std::string_view v) { return c.letters_text = v, !v.empty(); },
                  [](const RunConfig& c) { return c.letters_text; }}});
    f.push_back({"letters_spacing_mm", number(&RunConfig::letters_spacing_mm)});
    return f;
  }();
  return s;
}

inline const Field* find_field(std::string_view key) {
  for (const auto& [k, f] : schema())
    if (k == key) return &f;
  return nullptr;
}

inline void assign(RunConfig& c, std::string_view key, std::string_view value, const std::string& where) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
  if (!f->set(c, value)) {
    throw ConfigError(where + ": key '" + std::string(key) + "' expects " + f->type + ", got '" + std::string(value) + "'");
  }
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& [name, f] : detail::schema()) k.push_back(name);
  return k;
}

/// Parses `key = value` lines. Blank lines and text after '#' are ignored.
/// Unknown and repeated keys are errors; anything unset keeps its default.
inline RunConfig parse_config_text(std::string_view text, const std::string& source = "config") {
  RunConfig c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (!seen.insert(key).second) throw ConfigError(where + ": key '" + key + "' set twice");
    detail::assign(c, key, value, where);
  }
  c.validate();
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

/// Applies `key=value` overrides on top of a parsed config.
inline void apply_overrides(RunConfig& c, const std::vector<std::string>& overrides) {
  std::set<std::string, std::less<>> seen;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "': expected key=value");
    const std::string key(detail::trim(std::string_view(o).substr(0, eq)));
    if (!seen.insert(key).second) throw ConfigError("override '" + key + "' given twice");
    detail::assign(c, key, detail::trim(std::string_view(o).substr(eq + 1)), "override");
  }
  c.validate();
}

/// Canonical text with every key; parsing it gives back the same config.
inline std::string resolved_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, f] : detail::schema()) out += k + " = " + f.get(c) + "\n";
  return out;
}

inline std::uint64_t config_fingerprint(const RunConfig& c) { return numerics::fnv1a(resolved_text(c)); }

}  // namespace csipos::datastore
