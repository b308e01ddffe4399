// Compiled with -mavx2 only; callers reach it through the dispatch table
// after a CPUID check.
#include <immintrin.h>

#include <bit>

#include "kernels_impl.hpp"

namespace elkg::kernels::avx2 {

namespace {

void add_into(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_loadu_pd(acc + i);
    __m256d b = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(a, b));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void clamp_negative(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d le = _mm256_cmp_pd(v, zero, _CMP_LE_OQ);
    _mm256_storeu_pd(x + i, _mm256_blendv_pd(v, zero, le));
  }
  for (; i < n; ++i) x[i] = x[i] <= 0.0 ? 0.0 : x[i];
}

MinMax minmax(const double* x, std::size_t n) {
  MinMax r{x[0], x[0]};
  std::size_t i = 0;
  if (n >= 4) {
    __m256d lo = _mm256_loadu_pd(x);
    __m256d hi = lo;
    for (i = 4; i + 4 <= n; i += 4) {
      __m256d v = _mm256_loadu_pd(x + i);
      lo = _mm256_min_pd(lo, v);
      hi = _mm256_max_pd(hi, v);
    }
    alignas(32) double l[4], h[4];
    _mm256_store_pd(l, lo);
    _mm256_store_pd(h, hi);
    r = {l[0], h[0]};
    for (int k = 1; k < 4; ++k) {
      if (l[k] < r.min) r.min = l[k];
      if (h[k] > r.max) r.max = h[k];
    }
  }
  for (; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return canonical(r);
}

void scale_offset(const double* x, double* out, std::size_t n, double lo,
                  double range) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vrange = _mm256_set1_pd(range);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_sub_pd(v, vlo), vrange));
  }
  for (; i < n; ++i) out[i] = (x[i] - lo) / range;
}

std::size_t count_above(const double* x, std::size_t n, double limit) {
  const __m256d vlimit = _mm256_set1_pd(limit);
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gt = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vlimit, _CMP_GT_OQ);
    c += static_cast<std::size_t>(
        std::popcount(static_cast<unsigned>(_mm256_movemask_pd(gt))));
  }
  for (; i < n; ++i) c += x[i] > limit ? 1 : 0;
  return c;
}

void to_float(const double* x, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm_storeu_ps(out + i, _mm256_cvtpd_ps(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = static_cast<float>(x[i]);
}

}  // namespace

const KernelTable kTable{add_into, clamp_negative, minmax,
                         scale_offset, count_above, to_float};

}  // namespace elkg::kernels::avx2
