#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace gentrap::nx::kernels {

// All kernels accumulate into C. Every element of C is updated as
// c += a * b over the reduction index in increasing order, whichever code
// path (blocked or tail) handles it, so permuting rows of A permutes rows of
// C exactly.

namespace detail {

template <class T>
struct Simd {
  using vec __attribute__((vector_size(64), aligned(alignof(T)))) = T;
  static constexpr std::size_t width = 64 / sizeof(T);
};

/// C[M,N] += sum_p A(i,p) * B[p,:], A(i,p) = a[i*ai + p*ap], rows of B ldb apart.
template <class T>
void gemm_strided(const T* a, std::size_t ai, std::size_t ap, const T* b, std::size_t ldb, T* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  using V = typename Simd<T>::vec;
  constexpr std::size_t W = Simd<T>::width;
  constexpr std::size_t MR = 4;
  std::size_t j = 0;
  for (; j + 2 * W <= n; j += 2 * W) {
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) {
      V acc[MR][2];
      for (std::size_t r = 0; r < MR; ++r) {
        acc[r][0] = *reinterpret_cast<const V*>(c + (i + r) * n + j);
        acc[r][1] = *reinterpret_cast<const V*>(c + (i + r) * n + j + W);
      }
      for (std::size_t p = 0; p < k; ++p) {
        const V b0 = *reinterpret_cast<const V*>(b + p * ldb + j);
        const V b1 = *reinterpret_cast<const V*>(b + p * ldb + j + W);
        for (std::size_t r = 0; r < MR; ++r) {
          const T av = a[(i + r) * ai + p * ap];
          acc[r][0] += av * b0;
          acc[r][1] += av * b1;
        }
      }
      for (std::size_t r = 0; r < MR; ++r) {
        *reinterpret_cast<V*>(c + (i + r) * n + j) = acc[r][0];
        *reinterpret_cast<V*>(c + (i + r) * n + j + W) = acc[r][1];
      }
    }
    for (; i < m; ++i) {
      V acc0 = *reinterpret_cast<const V*>(c + i * n + j), acc1 = *reinterpret_cast<const V*>(c + i * n + j + W);
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * ai + p * ap];
        acc0 += av * *reinterpret_cast<const V*>(b + p * ldb + j);
        acc1 += av * *reinterpret_cast<const V*>(b + p * ldb + j + W);
      }
      *reinterpret_cast<V*>(c + i * n + j) = acc0;
      *reinterpret_cast<V*>(c + i * n + j + W) = acc1;
    }
  }
  for (; j + W <= n; j += W) {
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) {
      V acc[MR];
      for (std::size_t r = 0; r < MR; ++r) acc[r] = *reinterpret_cast<const V*>(c + (i + r) * n + j);
      for (std::size_t p = 0; p < k; ++p) {
        const V b0 = *reinterpret_cast<const V*>(b + p * ldb + j);
        for (std::size_t r = 0; r < MR; ++r) acc[r] += a[(i + r) * ai + p * ap] * b0;
      }
      for (std::size_t r = 0; r < MR; ++r) *reinterpret_cast<V*>(c + (i + r) * n + j) = acc[r];
    }
    for (; i < m; ++i) {
      V acc0 = *reinterpret_cast<const V*>(c + i * n + j);
      for (std::size_t p = 0; p < k; ++p) acc0 += a[i * ai + p * ap] * *reinterpret_cast<const V*>(b + p * ldb + j);
      *reinterpret_cast<V*>(c + i * n + j) = acc0;
    }
  }
  if (j == n) return;
  // remaining columns through a zero-padded copy of B's last strip
  const std::size_t rest = n - j;
  std::vector<T> bpad(k * W, T{0});
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t jj = 0; jj < rest; ++jj) bpad[p * W + jj] = b[p * ldb + j + jj];
  alignas(64) T tmp[MR][W];
  std::size_t i = 0;
  for (; i < m; i += MR) {
    const std::size_t rows = std::min(MR, m - i);
    V acc[MR];
    for (std::size_t r = 0; r < MR; ++r) {
      for (std::size_t jj = 0; jj < W; ++jj) tmp[r][jj] = r < rows && jj < rest ? c[(i + r) * n + j + jj] : T{0};
      acc[r] = *reinterpret_cast<const V*>(tmp[r]);
    }
    if (rows == MR) {
      for (std::size_t p = 0; p < k; ++p) {
        const V b0 = *reinterpret_cast<const V*>(bpad.data() + p * W);
        for (std::size_t r = 0; r < MR; ++r) acc[r] += a[(i + r) * ai + p * ap] * b0;
      }
    } else {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t p = 0; p < k; ++p) acc[r] += a[(i + r) * ai + p * ap] * *reinterpret_cast<const V*>(bpad.data() + p * W);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      *reinterpret_cast<V*>(tmp[r]) = acc[r];
      for (std::size_t jj = 0; jj < rest; ++jj) c[(i + r) * n + j + jj] = tmp[r][jj];
    }
  }
}

}  // namespace detail

/// C[M,N] += A[M,K] * B[K,N]
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  detail::gemm_strided(a, k, 1, b, n, c, m, k, n);
}

/// C[M,K] += A[M,N] * B[K,N]^T
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  std::vector<T> bt(n * k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + r] = b[r * n + j];
  gemm_nn(a, bt.data(), c, m, n, k);
}

/// C[K,N] += A[M,K]^T * B[M,N]
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  detail::gemm_strided(a, 1, k, b, n, c, k, m, n);
}

}  // namespace gentrap::nx::kernels
