#include "hdgflow/simd.hpp"

#include <cassert>

namespace hdgflow::simd::scalar {

void weighted_gram(std::size_t m, std::size_t n, std::span<const double> a,
                   std::span<const double> b, std::span<const double> w,
                   std::span<double> c)
{
  const std::size_t rows = w.size();
  assert(a.size() == rows * m && b.size() == rows * n && c.size() == m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = c[i * n + j];
      for (std::size_t r = 0; r < rows; ++r) {
        const double s = w[r] * a[r * m + i];
        acc = acc + s * b[r * n + j];
      }
      c[i * n + j] = acc;
    }
  }
}

void weighted_moment(std::size_t m, std::span<const double> a,
                     std::span<const double> w, std::span<double> out)
{
  const std::size_t rows = w.size();
  assert(a.size() == rows * m && out.size() == m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = out[i];
    for (std::size_t r = 0; r < rows; ++r)
      acc = acc + w[r] * a[r * m + i];
    out[i] = acc;
  }
}

} // namespace hdgflow::simd::scalar
