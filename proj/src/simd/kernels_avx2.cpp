// Compiled with -mavx2. Lanes run over independent output entries; the
// reduction over quadrature rows stays sequential per lane, matching the
// scalar reference operation for operation.

#include "hdgflow/simd.hpp"

#include <cassert>
#include <immintrin.h>

namespace hdgflow::simd::avx2 {

void weighted_gram(std::size_t m, std::size_t n, std::span<const double> a,
                   std::span<const double> b, std::span<const double> w,
                   std::span<double> c)
{
  const std::size_t rows = w.size();
  assert(a.size() == rows * m && b.size() == rows * n && c.size() == m * n);
  const double* pa = a.data();
  const double* pb = b.data();
  const double* pw = w.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d acc0 = _mm256_loadu_pd(ci + j);
      __m256d acc1 = _mm256_loadu_pd(ci + j + 4);
      for (std::size_t r = 0; r < rows; ++r) {
        const __m256d s = _mm256_set1_pd(pw[r] * pa[r * m + i]);
        const double* br = pb + r * n + j;
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(s, _mm256_loadu_pd(br)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(s, _mm256_loadu_pd(br + 4)));
      }
      _mm256_storeu_pd(ci + j, acc0);
      _mm256_storeu_pd(ci + j + 4, acc1);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d acc = _mm256_loadu_pd(ci + j);
      for (std::size_t r = 0; r < rows; ++r) {
        const __m256d s = _mm256_set1_pd(pw[r] * pa[r * m + i]);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(s, _mm256_loadu_pd(pb + r * n + j)));
      }
      _mm256_storeu_pd(ci + j, acc);
    }
    for (; j < n; ++j) {
      double acc = ci[j];
      for (std::size_t r = 0; r < rows; ++r) {
        const double s = pw[r] * pa[r * m + i];
        acc = acc + s * pb[r * n + j];
      }
      ci[j] = acc;
    }
  }
}

void weighted_moment(std::size_t m, std::span<const double> a,
                     std::span<const double> w, std::span<double> out)
{
  const std::size_t rows = w.size();
  assert(a.size() == rows * m && out.size() == m);
  const double* pa = a.data();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m256d acc = _mm256_loadu_pd(out.data() + i);
    for (std::size_t r = 0; r < rows; ++r)
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(w[r]), _mm256_loadu_pd(pa + r * m + i)));
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < m; ++i) {
    double acc = out[i];
    for (std::size_t r = 0; r < rows; ++r)
      acc = acc + w[r] * pa[r * m + i];
    out[i] = acc;
  }
}

} // namespace hdgflow::simd::avx2
