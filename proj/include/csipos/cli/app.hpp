#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csipos/channel/simulator.hpp"
#include "csipos/datastore/config.hpp"
#include "csipos/datastore/dataset_file.hpp"
#include "csipos/datastore/model_file.hpp"
#include "csipos/evalkit/report.hpp"
#include "csipos/evalkit/subsample.hpp"
#include "csipos/numerics/gradcheck.hpp"
#include "csipos/trainer/trainer.hpp"
#include "csipos/version.hpp"

namespace csipos::cli {

namespace fs = std::filesystem;

struct Options {
  std::string verb;
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> topology;
  std::optional<std::size_t> antennas;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> freeze_boundary;
  std::string data;
  std::string model;
  bool all_rows = false;
};

/// Writes each line to the stream and to <out>/<verb>.log.
class Log {
 public:
  Log(std::ostream& os, const fs::path& file) : os_(os), file_(file, std::ios::trunc) {}
  void line(const std::string& s) {
    os_ << s << '\n';
    if (file_) file_ << s << '\n';
  }

 private:
  std::ostream& os_;
  std::ofstream file_;
};

inline datastore::RunConfig resolve_config(const Options& o) {
  datastore::RunConfig cfg = o.config.empty() ? datastore::parse_config_text("") : datastore::parse_config(o.config);
  std::vector<std::string> ov = o.overrides;
  if (o.seed) ov.push_back("seed=" + std::to_string(*o.seed));
  if (o.topology) ov.push_back("topology=" + *o.topology);
  if (o.antennas) ov.push_back("antennas=" + std::to_string(*o.antennas));
  if (o.budget) ov.push_back("budget=" + std::to_string(*o.budget));
  if (o.freeze_boundary) ov.push_back("freeze_boundary=" + std::to_string(*o.freeze_boundary));
  datastore::apply_overrides(cfg, ov);
  return cfg;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + p.string());
  f << text;
}

/// run.cfg holds the resolved configuration (seed included); manifest.txt
/// names the verb, tool version, seed and fingerprint.
inline void write_manifest(const fs::path& out, const Options& o, const datastore::RunConfig& cfg) {
  write_text(out / "run.cfg", datastore::resolved_text(cfg));
  std::ostringstream m;
  m << "verb = " << o.verb << "\nversion = " << kVersion << "\nseed = " << cfg.seed
    << "\nconfig_fingerprint = " << evalkit::detail::hex(datastore::config_fingerprint(cfg)) << '\n';
  if (!o.data.empty()) m << "data = " << o.data << '\n';
  if (!o.model.empty()) m << "model = " << o.model << '\n';
  write_text(out / "manifest.txt", m.str());
}

inline channel::Dataset simulate_dataset(const datastore::RunConfig& cfg, std::vector<std::string>* warnings = nullptr) {
  const auto geo = cfg.geometry();
  const auto topo = channel::build_topology(cfg.topology, geo);
  auto ds = channel::generate_grid_dataset(topo, cfg.radio(), geo, cfg.grid(), cfg.data_seed, warnings);
  if (cfg.antennas != ds.n_antennas) ds = evalkit::antenna_subsample(ds, cfg.antennas, cfg.subsample);
  return ds;
}

/// Reads --data when given, otherwise simulates from the config. Antennas
/// are subsampled down to cfg.antennas when the data has more.
inline channel::Dataset obtain_dataset(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  if (o.data.empty()) {
    std::vector<std::string> warnings;
    auto ds = simulate_dataset(cfg, &warnings);
    for (const auto& w : warnings) log.line("warning: " + w);
    return ds;
  }
  auto ds = datastore::read_dataset(o.data);
  if (cfg.antennas < ds.n_antennas) ds = evalkit::antenna_subsample(ds, cfg.antennas, cfg.subsample);
  return ds;
}

inline std::string fmt(double v) { return evalkit::detail::fmt(v); }

inline void log_report(Log& log, const std::string& what, const evalkit::EvalReport& r) {
  log.line(what + ": " + std::to_string(r.per_sample_error_mm.size()) + " samples, ME " + fmt(r.me_mm) + " mm (" +
           fmt(r.me_lambda) + " lambda at c/fc, " + fmt(r.me_mm / channel::kQuotedWavelengthMm) + " at " +
           fmt(channel::kQuotedWavelengthMm) + " mm)");
}

inline void write_report(const fs::path& out, const evalkit::EvalReport& r, const datastore::RunConfig& cfg,
                         const std::string& prefix) {
  evalkit::write_report(out, r, prefix);
  if (cfg.cdf_resolution_mm > 0.0) {
    std::ofstream f(out / (prefix + "cdf_grid.csv"), std::ios::binary);
    evalkit::write_cdf(f, evalkit::error_cdf_grid(r.per_sample_error_mm, cfg.cdf_resolution_mm));
  }
}

inline void finish_training(const fs::path& out, Log& log, const datastore::RunConfig& cfg, const channel::Dataset& ds,
                            const trainer::TrainResult& res) {
  for (const auto& e : res.history.epochs) {
    log.line("epoch " + std::to_string(e.epoch) + " train_loss " + fmt(e.train_loss) + " val_loss " + fmt(e.val_loss) +
             " val_me_mm " + fmt(e.val_me_mm));
  }
  log.line("best epoch " + std::to_string(res.history.best_epoch));
  std::ofstream h(out / "history.csv", std::ios::binary);
  trainer::write_history(h, res.history);
  datastore::save_model(res.model, out / "model.csim");
  const auto report = evalkit::evaluate(res.model, ds, res.split.test, datastore::config_fingerprint(cfg));
  log_report(log, "test", report);
  write_report(out, report, cfg, "test_");
}

inline int run_simulate(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  const auto ds = obtain_dataset(o, cfg, log);
  datastore::write_dataset(ds, fs::path(o.out) / "dataset.csib");
  log.line("wrote " + std::to_string(ds.size()) + " samples, " + std::to_string(ds.n_antennas) + " antennas x " +
           std::to_string(ds.n_subcarriers) + " subcarriers, topology " + ds.topology_name);
  log.line("wavelength " + fmt(ds.radio.wavelength_mm()) + " mm (c/fc), quoted " + fmt(channel::kQuotedWavelengthMm) + " mm");
  return 0;
}

inline int run_train(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  const auto ds = obtain_dataset(o, cfg, log);
  auto arch = posnet::ArchConfig::defaults(ds.n_antennas, ds.n_subcarriers);
  arch.dropout_rate = cfg.dropout;
  auto model = posnet::build_positioning_cnn(arch, cfg.seed);
  log.line("parameters " + std::to_string(model.net.param_count()));
  const auto res = trainer::fit(std::move(model), ds, cfg.split(), cfg.training());
  finish_training(o.out, log, cfg, ds, res);
  return 0;
}

inline int run_transfer(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  if (o.model.empty()) throw UsageError("transfer needs --model (the pretrained model file)");
  const auto pretrained = datastore::load_model(o.model);
  const auto ds = obtain_dataset(o, cfg, log);
  const std::size_t boundary = cfg.freeze_boundary ? cfg.freeze_boundary : posnet::default_freeze_boundary(pretrained);
  const auto split = trainer::split_dataset(ds.size(), cfg.split());
  const std::size_t budget = cfg.budget ? cfg.budget : split.train.size();
  auto tc = cfg.training();
  tc.sample_budget.reset();
  const auto res = trainer::transfer_train(pretrained, ds, budget, boundary, cfg.split(), tc);
  const auto pc = posnet::param_count(res.model.net);
  log.line("freeze boundary " + std::to_string(boundary) + ", budget " + std::to_string(budget) + ", trainable " +
           std::to_string(pc.trainable) + " of " + std::to_string(pc.total));
  finish_training(o.out, log, cfg, ds, res);
  return 0;
}

inline int run_eval(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  if (o.model.empty()) throw UsageError("eval needs --model");
  const auto model = datastore::load_model(o.model);
  const auto ds = obtain_dataset(o, cfg, log);
  trainer::check_shapes(model, ds);
  std::vector<std::size_t> rows;
  if (o.all_rows) {
    rows.resize(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  } else {
    rows = trainer::split_dataset(ds.size(), cfg.split()).test;
  }
  const auto report = evalkit::evaluate(model, ds, rows, datastore::config_fingerprint(cfg));
  log_report(log, o.all_rows ? "all" : "test", report);
  write_report(o.out, report, cfg, "");
  return 0;
}

inline int run_letters(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  if (o.model.empty()) throw UsageError("letters needs --model");
  const auto model = datastore::load_model(o.model);
  const auto ds = obtain_dataset(o, cfg, log);
  trainer::check_shapes(model, ds);
  auto path = evalkit::letter_path(cfg.letters_text, channel::bounding_area(channel::user_areas(cfg.geometry())),
                                   cfg.letters_spacing_mm);
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto overlay = evalkit::letter_overlay(model, ds, rows, std::move(path), datastore::config_fingerprint(cfg));
  std::ofstream p(fs::path(o.out) / "letters_path.csv", std::ios::binary);
  evalkit::write_points(p, overlay.path);
  write_report(o.out, overlay.report, cfg, "letters_");
  log_report(log, "letters '" + cfg.letters_text + "'", overlay.report);
  return 0;
}

inline int run_gradcheck(const Options& o, const datastore::RunConfig& cfg, Log& log) {
  const auto results = numerics::run_gradcheck_suite(cfg.seed);
  bool ok = true;
  std::ostringstream table;
  table << "check,max_relative_error,checked\n";
  for (const auto& r : results) {
    ok = ok && r.max_relative_error < 1e-4;
    log.line(r.label + " max relative error " + fmt(r.max_relative_error) + " over " + std::to_string(r.checked));
    table << r.label << ',' << fmt(r.max_relative_error) << ',' << r.checked << '\n';
  }
  write_text(fs::path(o.out) / "gradcheck.csv", table.str());
  log.line(ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? 0 : static_cast<int>(ErrorCategory::numeric);
}

/// Parses argv and runs one verb. Returns the process exit code.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"CSI fingerprint positioning toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  auto common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", o.config, "configuration file (key = value)")->check(CLI::ExistingFile);
    auto* opt = sub->add_option("--out", o.out, "output directory");
    if (needs_out) opt->required();
    sub->add_option("--set", o.overrides, "override a config key, KEY=VALUE (repeatable)");
    sub->add_option("--seed", o.seed, "model/training seed");
    sub->add_option("--topology", o.topology, "ura, ula or dis")->check(CLI::IsMember({"ura", "ula", "dis"}));
    sub->add_option("--antennas", o.antennas, "antennas kept")->check(CLI::IsMember({8, 16, 32, 64}));
    sub->add_option("--budget", o.budget, "transfer sample budget");
    sub->add_option("--freeze-boundary", o.freeze_boundary, "parameterized layers frozen during transfer");
  };
  struct Verb {
    const char* name;
    const char* help;
    int (*run)(const Options&, const datastore::RunConfig&, Log&);
  };
  const Verb verbs[] = {
      {"simulate", "generate a synthetic dataset", run_simulate},
      {"train", "train a model from scratch", run_train},
      {"transfer", "fine-tune a pretrained model on a new deployment", run_transfer},
      {"eval", "evaluate a model on a dataset", run_eval},
      {"letters", "predict along a letter path", run_letters},
      {"gradcheck", "compare backprop with finite differences", run_gradcheck},
  };
  for (const auto& v : verbs) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    common(sub, true);
    if (std::string(v.name) != "simulate" && std::string(v.name) != "gradcheck") {
      sub->add_option("--data", o.data, "dataset file (simulated from the config when absent)")->check(CLI::ExistingFile);
    }
    if (std::string(v.name) == "transfer" || std::string(v.name) == "eval" || std::string(v.name) == "letters") {
      sub->add_option("--model", o.model, "model file")->check(CLI::ExistingFile);
    }
    if (std::string(v.name) == "eval") sub->add_flag("--all", o.all_rows, "evaluate every sample, not only the test split");
    sub->callback([&o, name = v.name] { o.verb = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::usage);
  }

  try {
    const auto cfg = resolve_config(o);
    fs::create_directories(o.out);
    write_manifest(o.out, o, cfg);
    Log log(out, fs::path(o.out) / (o.verb + ".log"));
    for (const auto& v : verbs)
      if (o.verb == v.name) return v.run(o, cfg, log);
    throw UsageError("unknown verb " + o.verb);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::data);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::numeric);
  }
}

}  // namespace csipos::cli
