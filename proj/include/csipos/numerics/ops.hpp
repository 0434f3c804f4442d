#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "csipos/numerics/gemm.hpp"
#include "csipos/numerics/tensor.hpp"

namespace csipos::numerics {

struct Extent2 {
  std::size_t rows = 1;  // antenna axis
  std::size_t cols = 1;  // subcarrier axis
  friend bool operator==(const Extent2&, const Extent2&) = default;
};

enum class Padding { same, valid };

/// Output extent and leading pad along one axis.
///
///   valid: out = (in - k) / stride + 1, no padding
///   same:  out = ceil(in / stride), total pad = max((out - 1) * stride + k - in, 0),
///          of which floor(total / 2) goes before the first element.
struct AxisPlan {
  std::size_t out = 0;
  std::size_t pad_before = 0;
};

inline AxisPlan plan_axis(std::size_t in, std::size_t k, std::size_t stride, Padding padding,
                          const char* axis_name) {
  if (k == 0 || stride == 0) {
    throw ShapeError(std::string("kernel extent and stride must be >= 1 on the ") + axis_name +
                     " axis");
  }
  if (padding == Padding::valid) {
    if (k > in) {
      throw ShapeError(std::string("kernel extent ") + std::to_string(k) + " exceeds input extent " +
                       std::to_string(in) + " on the " + axis_name + " axis");
    }
    return {(in - k) / stride + 1, 0};
  }
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + k;
  const std::size_t total = needed > in ? needed - in : 0;
  if (k > in + total) {
    throw ShapeError(std::string("kernel extent ") + std::to_string(k) +
                     " exceeds padded input extent on the " + axis_name + " axis");
  }
  return {out, total / 2};
}

struct ConvGeometry {
  std::size_t in_rows, in_cols, in_ch;
  std::size_t k_rows, k_cols, out_ch;
  std::size_t stride_rows, stride_cols;
  AxisPlan rows, cols;
};

inline ConvGeometry conv_geometry(const Shape& input, const Shape& kernels, Extent2 stride,
                                  Padding padding) {
  if (input.size() != 3) throw ShapeError("conv2d input must be rank 3 [rows,cols,channels], got " + shape_string(input));
  if (kernels.size() != 4) throw ShapeError("conv2d kernels must be rank 4 [kh,kw,cin,cout], got " + shape_string(kernels));
  if (kernels[2] != input[2]) {
    throw ShapeError("conv2d channel axis mismatch: input has " + std::to_string(input[2]) +
                     " channels, kernels expect " + std::to_string(kernels[2]));
  }
  ConvGeometry g{input[0], input[1], input[2], kernels[0], kernels[1], kernels[3],
                 stride.rows, stride.cols, {}, {}};
  g.rows = plan_axis(g.in_rows, g.k_rows, g.stride_rows, padding, "row (antenna)");
  g.cols = plan_axis(g.in_cols, g.k_cols, g.stride_cols, padding, "column (subcarrier)");
  return g;
}

/// Patch matrix of an HWC input: row m = output pixel, column
/// (i * kw + j) * cin + ci = input value under kernel tap (i, j, ci), zero
/// where the tap falls in padding. Its column order matches the flattened
/// [kh,kw,cin,cout] kernel, so the convolution is one matrix product.
inline void im2col(const double* x, const ConvGeometry& g, std::vector<double>& cols) {
  const std::size_t kd = g.k_rows * g.k_cols * g.in_ch;
  cols.resize(g.rows.out * g.cols.out * kd);
  for (std::size_t orow = 0; orow < g.rows.out; ++orow) {
    for (std::size_t ocol = 0; ocol < g.cols.out; ++ocol) {
      double* dst = cols.data() + (orow * g.cols.out + ocol) * kd;
      for (std::size_t i = 0; i < g.k_rows; ++i) {
        const std::ptrdiff_t irow = static_cast<std::ptrdiff_t>(orow * g.stride_rows + i) -
                                    static_cast<std::ptrdiff_t>(g.rows.pad_before);
        const bool row_in = irow >= 0 && irow < static_cast<std::ptrdiff_t>(g.in_rows);
        for (std::size_t j = 0; j < g.k_cols; ++j) {
          const std::ptrdiff_t icol = static_cast<std::ptrdiff_t>(ocol * g.stride_cols + j) -
                                      static_cast<std::ptrdiff_t>(g.cols.pad_before);
          double* tap = dst + (i * g.k_cols + j) * g.in_ch;
          if (!row_in || icol < 0 || icol >= static_cast<std::ptrdiff_t>(g.in_cols)) {
            std::fill(tap, tap + g.in_ch, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::size_t>(irow) * g.in_cols + static_cast<std::size_t>(icol)) * g.in_ch;
          std::copy(src, src + g.in_ch, tap);
        }
      }
    }
  }
}

/// Scatter-adds a patch-matrix gradient back onto the input layout.
inline void col2im_add(const double* cols, const ConvGeometry& g, double* x) {
  const std::size_t kd = g.k_rows * g.k_cols * g.in_ch;
  for (std::size_t orow = 0; orow < g.rows.out; ++orow) {
    for (std::size_t ocol = 0; ocol < g.cols.out; ++ocol) {
      const double* src = cols + (orow * g.cols.out + ocol) * kd;
      for (std::size_t i = 0; i < g.k_rows; ++i) {
        const std::ptrdiff_t irow = static_cast<std::ptrdiff_t>(orow * g.stride_rows + i) -
                                    static_cast<std::ptrdiff_t>(g.rows.pad_before);
        if (irow < 0 || irow >= static_cast<std::ptrdiff_t>(g.in_rows)) continue;
        for (std::size_t j = 0; j < g.k_cols; ++j) {
          const std::ptrdiff_t icol = static_cast<std::ptrdiff_t>(ocol * g.stride_cols + j) -
                                      static_cast<std::ptrdiff_t>(g.cols.pad_before);
          if (icol < 0 || icol >= static_cast<std::ptrdiff_t>(g.in_cols)) continue;
          double* dst = x + (static_cast<std::size_t>(irow) * g.in_cols + static_cast<std::size_t>(icol)) * g.in_ch;
          const double* s = src + (i * g.k_cols + j) * g.in_ch;
          for (std::size_t ci = 0; ci < g.in_ch; ++ci) dst[ci] += s[ci];
        }
      }
    }
  }
}

namespace detail {
/// Per-thread scratch reused across calls; convolution is called in a tight
/// training loop and fresh large vectors cost more than the arithmetic.
struct ConvScratch {
  std::vector<double> cols, w_t, grad_cols;
};
inline ConvScratch& conv_scratch() {
  thread_local ConvScratch s;
  return s;
}
}  // namespace detail

/// Cross-correlation (no kernel flip) of an HWC input with [kh,kw,cin,cout] kernels.
inline Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, Extent2 stride,
                     Padding padding) {
  const ConvGeometry g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
  if (bias.size() != g.out_ch) {
    throw ShapeError("conv2d bias length " + std::to_string(bias.size()) + " does not match " +
                     std::to_string(g.out_ch) + " output channels");
  }
  const std::size_t pixels = g.rows.out * g.cols.out;
  const std::size_t kd = g.k_rows * g.k_cols * g.in_ch;
  Tensor out({g.rows.out, g.cols.out, g.out_ch});
  double* y = out.data();
  for (std::size_t m = 0; m < pixels; ++m) std::copy(bias.data(), bias.data() + g.out_ch, y + m * g.out_ch);
  auto& cols = detail::conv_scratch().cols;
  im2col(input.data(), g, cols);
  gemm(pixels, g.out_ch, kd, cols.data(), kd, kernels.data(), g.out_ch, y, g.out_ch);
  return out;
}

/// Accumulates conv2d gradients. grad_input may be null when not needed.
inline void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            Extent2 stride, Padding padding, Tensor* grad_input,
                            Tensor& grad_kernels, Tensor& grad_bias) {
  const ConvGeometry g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
  const std::size_t pixels = g.rows.out * g.cols.out;
  const std::size_t kd = g.k_rows * g.k_cols * g.in_ch;
  const std::size_t cout = g.out_ch;
  const double* gy = grad_out.data();
  for (std::size_t m = 0; m < pixels; ++m)
    for (std::size_t co = 0; co < cout; ++co) grad_bias[co] += gy[m * cout + co];

  auto& scratch = detail::conv_scratch();
  auto& cols = scratch.cols;
  im2col(input.data(), g, cols);
  gemm_tn(kd, cout, pixels, cols.data(), kd, gy, cout, grad_kernels.data(), cout);

  if (grad_input) {
    auto& w_t = scratch.w_t;
    w_t.resize(kd * cout);
    transpose(kd, cout, kernels.data(), w_t.data());
    auto& grad_cols = scratch.grad_cols;
    grad_cols.resize(pixels * kd);
    gemm(pixels, kd, cout, gy, cout, w_t.data(), kd, grad_cols.data(), kd, false);
    col2im_add(grad_cols.data(), g, grad_input->data());
  }
}

/// y = x W + b with W laid out [in, out].
inline Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2 || input.size() != weights.extent(0) || bias.size() != weights.extent(1)) {
    throw ShapeError("dense: input length " + std::to_string(input.size()) + ", weights " +
                     shape_string(weights.shape()) + ", bias length " + std::to_string(bias.size()));
  }
  const std::size_t n_in = weights.extent(0), n_out = weights.extent(1);
  Tensor out({n_out}, bias.storage());
  double* y = out.data();
  for (std::size_t i = 0; i < n_in; ++i) {
    const double xv = input[i];
    const double* wr = weights.data() + i * n_out;
    for (std::size_t o = 0; o < n_out; ++o) y[o] += xv * wr[o];
  }
  return out;
}

inline void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                           Tensor* grad_input, Tensor& grad_weights, Tensor& grad_bias) {
  const std::size_t n_in = weights.extent(0), n_out = weights.extent(1);
  const double* go = grad_out.data();
  for (std::size_t o = 0; o < n_out; ++o) grad_bias[o] += go[o];
  for (std::size_t i = 0; i < n_in; ++i) {
    const double xv = input[i];
    double* gwr = grad_weights.data() + i * n_out;
    const double* wr = weights.data() + i * n_out;
    double acc = 0.0;
    for (std::size_t o = 0; o < n_out; ++o) {
      gwr[o] += xv * go[o];
      acc += wr[o] * go[o];
    }
    if (grad_input) (*grad_input)[i] += acc;
  }
}

inline Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return out;
}

/// Mean of squared componentwise differences between two (x, y) pairs.
inline double mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.size() != 2 || target.size() != 2) {
    throw ShapeError("mse_loss expects two length-2 tensors, got " + shape_string(pred.shape()) +
                     " and " + shape_string(target.shape()));
  }
  const double dx = pred[0] - target[0];
  const double dy = pred[1] - target[1];
  return 0.5 * (dx * dx + dy * dy);
}

/// d mse_loss / d pred.
inline Tensor mse_loss_grad(const Tensor& pred, const Tensor& target) {
  mse_loss(pred, target);
  return Tensor({2}, {pred[0] - target[0], pred[1] - target[1]});
}

}  // namespace csipos::numerics
