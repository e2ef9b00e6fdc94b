// AVX2 + FMA kernels. This translation unit is built with -mavx2 -mfma and is
// only reached after a runtime CPU check, so it must not pull in standard
// library templates that could be shared with baseline-ISA code.

#include <immintrin.h>

#include "medsel/kernel_table.hpp"

namespace medsel::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Four dot products against a shared right-hand side.
inline void dot4(const double* a0, const double* a1, const double* a2, const double* a3,
                 const double* x, std::size_t n, double* out) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + i), xv, s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + i), xv, s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + i), xv, s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a3 + i), xv, s3);
  }
  double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
  for (; i < n; ++i) {
    r0 += a0[i] * x[i];
    r1 += a1[i] * x[i];
    r2 += a2[i] * x[i];
    r3 += a3[i] * x[i];
  }
  out[0] += r0;
  out[1] += r1;
  out[2] += r2;
  out[3] += r3;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// y += c0*r0 + c1*r1 + c2*r2 + c3*r3
inline void axpy4(double c0, const double* r0, double c1, const double* r1, double c2,
                  const double* r2, double c3, const double* r3, double* y, std::size_t n) {
  const __m256d v0 = _mm256_set1_pd(c0), v1 = _mm256_set1_pd(c1);
  const __m256d v2 = _mm256_set1_pd(c2), v3 = _mm256_set1_pd(c3);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(v0, _mm256_loadu_pd(r0 + i), acc);
    acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(r1 + i), acc);
    acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(r2 + i), acc);
    acc = _mm256_fmadd_pd(v3, _mm256_loadu_pd(r3 + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i) y[i] += c0 * r0[i] + c1 * r1[i] + c2 * r2[i] + c3 * r3[i];
}

void gemv_acc(const double* a, std::size_t m, std::size_t n, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4)
    dot4(a + i * n, a + (i + 1) * n, a + (i + 2) * n, a + (i + 3) * n, x, n, y + i);
  for (; i < m; ++i) y[i] += dot(a + i * n, x, n);
}

void gemv_t_acc(const double* a, std::size_t m, std::size_t n, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4)
    axpy4(x[i], a + i * n, x[i + 1], a + (i + 1) * n, x[i + 2], a + (i + 2) * n, x[i + 3],
          a + (i + 3) * n, y, n);
  for (; i < m; ++i) axpy(x[i], a + i * n, y, n);
}

void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  std::size_t j = 0;
  double tmp[4];
  for (; j + 4 <= n; j += 4) {
    const double* b0 = b + j * k;
    for (std::size_t i = 0; i < m; ++i) {
      tmp[0] = tmp[1] = tmp[2] = tmp[3] = 0.0;
      dot4(b0, b0 + k, b0 + 2 * k, b0 + 3 * k, a + i * k, k, tmp);
      double* ci = c + i * n + j;
      ci[0] += tmp[0];
      ci[1] += tmp[1];
      ci[2] += tmp[2];
      ci[3] += tmp[3];
    }
  }
  for (; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) c[i * n + j] += dot(a + i * k, b + j * k, k);
}

void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const double* b0 = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a + i * k + p;
      axpy4(ai[0], b0, ai[1], b0 + n, ai[2], b0 + 2 * n, ai[3], b0 + 3 * n, c + i * n, n);
    }
  }
  for (; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) axpy(a[i * k + p], b + p * n, c + i * n, n);
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  constexpr std::size_t kTile = 8;
  for (std::size_t i0 = 0; i0 < m; i0 += kTile) {
    const std::size_t i1 = i0 + kTile < m ? i0 + kTile : m;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const double* b0 = b + p * n;
      for (std::size_t i = i0; i < i1; ++i)
        axpy4(a[p * m + i], b0, a[(p + 1) * m + i], b0 + n, a[(p + 2) * m + i], b0 + 2 * n,
              a[(p + 3) * m + i], b0 + 3 * n, c + i * n, n);
    }
    for (; p < k; ++p)
      for (std::size_t i = i0; i < i1; ++i) axpy(a[p * m + i], b + p * n, c + i * n, n);
  }
}

double sqdist(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    s0 = _mm256_fmadd_pd(d0, d0, s0);
    s1 = _mm256_fmadd_pd(d1, d1, s1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    s0 = _mm256_fmadd_pd(d0, d0, s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Table& avx2_table() {
  static const Table t{dot, axpy, gemv_acc, gemv_t_acc, gemm_nt_acc, gemm_nn_acc, gemm_tn_acc, sqdist};
  return t;
}

}  // namespace medsel::kernels
