#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "csipos/channel/types.hpp"
#include "csipos/numerics/tensor.hpp"

namespace csipos::features {

using numerics::Tensor;
using cplx = std::complex<double>;

/// Channel order of the N x K x 6 input stack.
enum Plane : std::size_t { raw_re = 0, raw_im, amp, phase, time_re, time_im, kPlaneCount };

/// Real N x K x 6 tensor with planes in `Plane` order.
using FeatureTensor = Tensor;

struct Polar {
  std::vector<double> amp;
  std::vector<double> phase;
};

/// Magnitude and atan2 phase in (-pi, pi]; atan2(0, 0) is 0.
inline Polar to_polar(std::span<const cplx> H) {
  Polar p;
  p.amp.resize(H.size());
  p.phase.resize(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    p.amp[i] = std::abs(H[i]);
    double ph = std::atan2(H[i].imag(), H[i].real());
    if (ph == -std::numbers::pi) ph = std::numbers::pi;
    p.phase[i] = ph + 0.0;  // folds -0 to +0
  }
  return p;
}

/// Inverse DFT along the subcarrier axis of an antenna-major N x K matrix:
///
///   h[t] = (1/K) sum_k H[k] exp(+j 2 pi k t / K)
///
/// Evaluated directly, O(K^2) per row, for any K.
inline std::vector<cplx> idft_time(std::span<const cplx> H, std::size_t K) {
  if (K == 0 || H.size() % K != 0) {
    throw ShapeError("idft_time: matrix of " + std::to_string(H.size()) + " values is not a whole number of rows of " +
                     std::to_string(K));
  }
  std::vector<cplx> twiddle(K);
  for (std::size_t m = 0; m < K; ++m) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(K);
    twiddle[m] = {std::cos(angle), std::sin(angle)};
  }
  const std::size_t rows = H.size() / K;
  std::vector<cplx> out(H.size());
  const double inv_k = 1.0 / static_cast<double>(K);
  for (std::size_t r = 0; r < rows; ++r) {
    const cplx* row = H.data() + r * K;
    for (std::size_t t = 0; t < K; ++t) {
      cplx acc{0.0, 0.0};
      for (std::size_t k = 0; k < K; ++k) acc += row[k] * twiddle[(k * t) % K];
      out[r * K + t] = acc * inv_k;
    }
  }
  return out;
}

/// Stacks [re, im, |H|, arg H, re h, im h] into an unnormalized N x K x 6 tensor.
inline FeatureTensor build_feature_tensor(std::span<const cplx> H, std::size_t N, std::size_t K) {
  if (H.size() != N * K) {
    throw ShapeError("build_feature_tensor: expected " + std::to_string(N) + "x" + std::to_string(K) +
                     " values, got " + std::to_string(H.size()));
  }
  for (const cplx& h : H) {
    if (!std::isfinite(h.real()) || !std::isfinite(h.imag())) {
      throw DataError("build_feature_tensor: non-finite channel coefficient");
    }
  }
  const Polar polar = to_polar(H);
  const std::vector<cplx> time = idft_time(H, K);
  Tensor out({N, K, kPlaneCount});
  double* o = out.data();
  for (std::size_t i = 0; i < N * K; ++i, o += kPlaneCount) {
    o[raw_re] = H[i].real();
    o[raw_im] = H[i].imag();
    o[amp] = polar.amp[i];
    o[phase] = polar.phase[i];
    o[time_re] = time[i].real();
    o[time_im] = time[i].imag();
  }
  return out;
}

/// Per-plane standardization fitted on training tensors only. The phase
/// plane passes through unscaled.
struct FeatureNormalizer {
  std::array<double, kPlaneCount> offset{};
  std::array<double, kPlaneCount> scale{1, 1, 1, 1, 1, 1};

  static FeatureNormalizer fit(std::span<const FeatureTensor> training) {
    if (training.empty()) throw DataError("normalizer: empty training split");
    std::array<double, kPlaneCount> sum{}, count{};
    for (const auto& t : training) {
      const double* v = t.data();
      for (std::size_t i = 0; i < t.size(); i += kPlaneCount)
        for (std::size_t p = 0; p < kPlaneCount; ++p) sum[p] += v[i + p], count[p] += 1.0;
    }
    FeatureNormalizer n;
    for (std::size_t p = 0; p < kPlaneCount; ++p) n.offset[p] = sum[p] / count[p];
    std::array<double, kPlaneCount> sq{};
    for (const auto& t : training) {
      const double* v = t.data();
      for (std::size_t i = 0; i < t.size(); i += kPlaneCount)
        for (std::size_t p = 0; p < kPlaneCount; ++p) {
          const double d = v[i + p] - n.offset[p];
          sq[p] += d * d;
        }
    }
    for (std::size_t p = 0; p < kPlaneCount; ++p) {
      const double sd = std::sqrt(sq[p] / count[p]);
      n.scale[p] = sd > 0.0 ? sd : 1.0;
    }
    n.offset[phase] = 0.0;
    n.scale[phase] = 1.0;
    return n;
  }

  void apply(FeatureTensor& t) const {
    double* v = t.data();
    for (std::size_t i = 0; i < t.size(); i += kPlaneCount)
      for (std::size_t p = 0; p < kPlaneCount; ++p) v[i + p] = (v[i + p] - offset[p]) / scale[p];
  }

  friend bool operator==(const FeatureNormalizer&, const FeatureNormalizer&) = default;
};

/// Affine map of the user area onto [0, 1]^2.
struct LabelMap {
  channel::Area area;

  std::array<double, 2> normalize(const channel::Position& p) const {
    return {(p.x - area.x_min) / area.width, (p.y - area.y_min) / area.depth};
  }
  channel::Position denormalize(double u, double v) const {
    return {area.x_min + u * area.width, area.y_min + v * area.depth};
  }

  /// Bounding box of the given labels; degenerate extents fall back to 1 mm.
  static LabelMap fit(std::span<const channel::Position> labels) {
    if (labels.empty()) throw DataError("label map: no labels");
    double x0 = labels[0].x, x1 = x0, y0 = labels[0].y, y1 = y0;
    for (const auto& p : labels) {
      x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    }
    return {{x0, y0, x1 > x0 ? x1 - x0 : 1.0, y1 > y0 ? y1 - y0 : 1.0}};
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

}  // namespace csipos::features
