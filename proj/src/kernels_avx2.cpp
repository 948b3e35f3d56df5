// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma only on x86_64 builds;
// callers must check CPU support before selecting this table (dispatch.cpp).
// Reductions use four independent lanes combined in a fixed order, so results
// are reproducible per variant but differ from the scalar table in rounding.

#include "mor/kernels.hpp"

#include <immintrin.h>

namespace mor::kernels
{

namespace
{

inline double hsum4(__m256d v)
{
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

double dot_avx2(const double *x, const double *y, std::size_t n)
{
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
  {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  if (i + 4 <= n)
  {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    i += 4;
  }
  double acc = hsum4(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
  {
    acc += x[i] * y[i];
  }
  return acc;
}

void axpy_avx2(std::size_t n, double a, const double *x, double *y)
{
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
  {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i)
  {
    y[i] += a * x[i];
  }
}

void scal_avx2(std::size_t n, double a, double *x)
{
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
  {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i)
  {
    x[i] *= a;
  }
}

double gather_dot_avx2(const double *vals, const std::int32_t *idx, const double *x, std::size_t len)
{
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4)
  {
    const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i *>(idx + k));
    const __m256d vx = _mm256_i32gather_pd(x, vi, 8);
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), vx, acc0);
  }
  double acc = hsum4(acc0);
  for (; k < len; ++k)
  {
    acc += vals[k] * x[idx[k]];
  }
  return acc;
}

} // namespace

const Ops &avx2_ops()
{
  static const Ops ops{dot_avx2, axpy_avx2, scal_avx2, gather_dot_avx2};
  return ops;
}

} // namespace mor::kernels
