#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "csipos/evalkit/letters.hpp"
#include "csipos/evalkit/metrics.hpp"
#include "csipos/posnet/posnet.hpp"
#include "csipos/trainer/trainer.hpp"

namespace csipos::evalkit {

struct EvalReport {
  std::vector<std::size_t> rows;
  std::vector<Position> truths;
  std::vector<Position> predictions;
  std::vector<double> per_sample_error_mm;
  double me_mm = 0.0;
  double me_lambda = 0.0;
  std::vector<CdfPoint> cdf;
  std::uint64_t config_fingerprint = 0;
  std::size_t n_antennas = 0;
};

inline EvalReport make_report(std::vector<std::size_t> rows, std::vector<Position> predictions,
                              std::vector<Position> truths, double wavelength_mm, std::uint64_t fingerprint,
                              std::size_t n_antennas) {
  EvalReport r;
  r.per_sample_error_mm = euclidean_errors(predictions, truths);
  r.me_mm = mean(r.per_sample_error_mm);
  r.me_lambda = r.me_mm / wavelength_mm;
  r.cdf = error_cdf(r.per_sample_error_mm);
  r.rows = std::move(rows);
  r.truths = std::move(truths);
  r.predictions = std::move(predictions);
  r.config_fingerprint = fingerprint;
  r.n_antennas = n_antennas;
  return r;
}

inline std::vector<Position> predict_rows(const posnet::PositioningModel& model, const channel::Dataset& ds,
                                          std::span<const std::size_t> rows) {
  trainer::check_shapes(model, ds);
  std::vector<Position> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(posnet::locate(model, ds.samples.at(r).H));
  return out;
}

inline EvalReport evaluate(const posnet::PositioningModel& model, const channel::Dataset& ds,
                           std::span<const std::size_t> rows, std::uint64_t fingerprint = 0) {
  auto pred = predict_rows(model, ds, rows);
  std::vector<Position> truth;
  for (std::size_t r : rows) truth.push_back(ds.samples[r].position);
  return make_report({rows.begin(), rows.end()}, std::move(pred), std::move(truth), ds.radio.wavelength_mm(),
                     fingerprint, ds.n_antennas);
}

/// Predicts the label of the training sample whose raw CSI is closest in
/// squared Euclidean distance over all N*K complex entries.
inline std::vector<Position> nearest_neighbour_baseline(const channel::Dataset& ds,
                                                        std::span<const std::size_t> reference,
                                                        std::span<const std::size_t> queries) {
  if (reference.empty()) throw DataError("nearest-neighbour baseline: no reference samples");
  std::vector<Position> out;
  out.reserve(queries.size());
  for (std::size_t q : queries) {
    const auto& hq = ds.samples.at(q).H;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = reference[0];
    for (std::size_t r : reference) {
      const auto& hr = ds.samples.at(r).H;
      double d = 0.0;
      for (std::size_t i = 0; i < hq.size(); ++i) d += std::norm(hq[i] - hr[i]);
      if (d < best) best = d, arg = r;
    }
    out.push_back(ds.samples[arg].position);
  }
  return out;
}

struct LetterOverlay {
  std::vector<Position> path;
  std::vector<std::size_t> rows;  // nearest dataset sample per waypoint
  EvalReport report;
};

/// Snaps every waypoint to the nearest sample among `candidates` and predicts it.
inline LetterOverlay letter_overlay(const posnet::PositioningModel& model, const channel::Dataset& ds,
                                    std::span<const std::size_t> candidates, std::vector<Position> path,
                                    std::uint64_t fingerprint = 0) {
  if (candidates.empty()) throw DataError("letters: no candidate samples");
  LetterOverlay o;
  for (const auto& p : path) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = candidates[0];
    for (std::size_t c : candidates) {
      const auto& q = ds.samples.at(c).position;
      const double d = std::hypot(q.x - p.x, q.y - p.y);
      if (d < best) best = d, arg = c;
    }
    o.rows.push_back(arg);
  }
  o.path = std::move(path);
  o.report = evaluate(model, ds, o.rows, fingerprint);
  return o;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  return f;
}

}  // namespace detail

inline void write_errors(std::ostream& os, const EvalReport& r) {
  os << "sample,x_mm,y_mm,pred_x_mm,pred_y_mm,error_mm\n";
  for (std::size_t i = 0; i < r.per_sample_error_mm.size(); ++i) {
    os << (i < r.rows.size() ? r.rows[i] : i) << ',' << detail::fmt(r.truths[i].x) << ',' << detail::fmt(r.truths[i].y)
       << ',' << detail::fmt(r.predictions[i].x) << ',' << detail::fmt(r.predictions[i].y) << ','
       << detail::fmt(r.per_sample_error_mm[i]) << '\n';
  }
}

inline void write_cdf(std::ostream& os, const std::vector<CdfPoint>& cdf) {
  os << "error_mm,fraction\n";
  for (const auto& p : cdf) os << detail::fmt(p.error_mm) << ',' << detail::fmt(p.fraction) << '\n';
}

inline void write_summary(std::ostream& os, const EvalReport& r) {
  os << "me_mm,me_lambda,n_antennas,config_fingerprint\n"
     << detail::fmt(r.me_mm) << ',' << detail::fmt(r.me_lambda) << ',' << r.n_antennas << ','
     << detail::hex(r.config_fingerprint) << '\n';
}

/// Writes <prefix>errors.csv, <prefix>cdf.csv and <prefix>summary.csv into dir.
inline void write_report(const std::filesystem::path& dir, const EvalReport& r, const std::string& prefix = "") {
  std::filesystem::create_directories(dir);
  auto e = detail::open_out(dir / (prefix + "errors.csv"));
  write_errors(e, r);
  auto c = detail::open_out(dir / (prefix + "cdf.csv"));
  write_cdf(c, r.cdf);
  auto s = detail::open_out(dir / (prefix + "summary.csv"));
  write_summary(s, r);
}

inline void write_points(std::ostream& os, const std::vector<Position>& pts) {
  os << "x_mm,y_mm\n";
  for (const auto& p : pts) os << detail::fmt(p.x) << ',' << detail::fmt(p.y) << '\n';
}

}  // namespace csipos::evalkit
