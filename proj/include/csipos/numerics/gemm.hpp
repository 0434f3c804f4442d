#pragma once

#include <cstddef>
#include <cstring>

#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wpsabi"
#endif

namespace csipos::numerics {

namespace detail {

// Four-lane double vector (GCC/Clang vector extension). Loads and stores go
// through memcpy so operands need no particular alignment.
typedef double v4d __attribute__((vector_size(32)));

inline v4d load4(const double* p) {
  v4d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store4(double* p, v4d v) { std::memcpy(p, &v, sizeof v); }

// 6 x 8 tile of C += A * B. Element (r, p) of A sits at a[r * rs + p * ps].
inline void micro_6x8(std::size_t K, const double* a, std::size_t rs, std::size_t ps, const double* B,
                      std::size_t ldb, double* C, std::size_t ldc, bool accumulate) {
  v4d c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{}, c40{}, c41{}, c50{}, c51{};
  for (std::size_t p = 0; p < K; ++p, a += ps) {
    const v4d b0 = load4(B + p * ldb);
    const v4d b1 = load4(B + p * ldb + 4);
    c00 += a[0] * b0, c01 += a[0] * b1;
    c10 += a[rs] * b0, c11 += a[rs] * b1;
    c20 += a[2 * rs] * b0, c21 += a[2 * rs] * b1;
    c30 += a[3 * rs] * b0, c31 += a[3 * rs] * b1;
    c40 += a[4 * rs] * b0, c41 += a[4 * rs] * b1;
    c50 += a[5 * rs] * b0, c51 += a[5 * rs] * b1;
  }
  const v4d acc[6][2] = {{c00, c01}, {c10, c11}, {c20, c21}, {c30, c31}, {c40, c41}, {c50, c51}};
  for (std::size_t r = 0; r < 6; ++r) {
    double* crow = C + r * ldc;
    store4(crow, accumulate ? load4(crow) + acc[r][0] : acc[r][0]);
    store4(crow + 4, accumulate ? load4(crow + 4) + acc[r][1] : acc[r][1]);
  }
}

inline void micro_1x8(std::size_t K, const double* a, std::size_t ps, const double* B, std::size_t ldb, double* C,
                      bool accumulate) {
  v4d c0{}, c1{};
  for (std::size_t p = 0; p < K; ++p, a += ps) {
    c0 += *a * load4(B + p * ldb);
    c1 += *a * load4(B + p * ldb + 4);
  }
  store4(C, accumulate ? load4(C) + c0 : c0);
  store4(C + 4, accumulate ? load4(C + 4) + c1 : c1);
}

inline void gemm_strided(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t rs,
                         std::size_t ps, const double* B, std::size_t ldb, double* C, std::size_t ldc,
                         bool accumulate) {
  constexpr std::size_t MR = 6, NR = 8;
  const std::size_t n_full = N - N % NR;
  for (std::size_t j = 0; j < n_full; j += NR) {
    std::size_t i = 0;
    for (; i + MR <= M; i += MR) micro_6x8(K, A + i * rs, rs, ps, B + j, ldb, C + i * ldc + j, ldc, accumulate);
    for (; i < M; ++i) micro_1x8(K, A + i * rs, ps, B + j, ldb, C + i * ldc + j, accumulate);
  }
  if (n_full < N) {
    for (std::size_t i = 0; i < M; ++i) {
      double* crow = C + i * ldc;
      if (!accumulate)
        for (std::size_t c = n_full; c < N; ++c) crow[c] = 0.0;
      for (std::size_t p = 0; p < K; ++p) {
        const double a = A[i * rs + p * ps];
        const double* b = B + p * ldb;
        for (std::size_t c = n_full; c < N; ++c) crow[c] += a * b[c];
      }
    }
  }
}

}  // namespace detail

/// C[M x N] (+)= A[M x K] * B[K x N], row-major with leading dimensions.
/// Register-blocked 6 x 8; the last N % 8 columns use plain loops.
inline void gemm(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
                 std::size_t ldb, double* C, std::size_t ldc, bool accumulate = true) {
  detail::gemm_strided(M, N, K, A, lda, 1, B, ldb, C, ldc, accumulate);
}

/// C[M x N] (+)= A^T * B where A is stored K x M row-major.
inline void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
                    std::size_t ldb, double* C, std::size_t ldc, bool accumulate = true) {
  detail::gemm_strided(M, N, K, A, 1, lda, B, ldb, C, ldc, accumulate);
}

/// out[cols x rows] = in[rows x cols]^T
inline void transpose(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
}

}  // namespace csipos::numerics

#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic pop
#endif
