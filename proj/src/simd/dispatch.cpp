#include "hdgflow/simd.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace hdgflow::simd {

namespace {

bool cpu_has_avx2()
{
#if defined(HDGFLOW_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Backend>& current()
{
  static std::atomic<Backend> backend{cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar};
  return backend;
}

} // namespace

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool backend_supported(Backend backend)
{
  return backend == Backend::Scalar || cpu_has_avx2();
}

void set_backend(Backend backend)
{
  if (!backend_supported(backend))
    throw std::invalid_argument("SIMD backend " + std::string(backend_name(backend)) +
                                " is not supported on this CPU/build");
  current().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend)
{
  switch (backend) {
  case Backend::Scalar: return "scalar";
  case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

void weighted_gram(std::size_t m, std::size_t n, std::span<const double> a,
                   std::span<const double> b, std::span<const double> w,
                   std::span<double> c)
{
#if defined(HDGFLOW_HAVE_AVX2)
  if (active_backend() == Backend::Avx2)
    return avx2::weighted_gram(m, n, a, b, w, c);
#endif
  scalar::weighted_gram(m, n, a, b, w, c);
}

void weighted_moment(std::size_t m, std::span<const double> a,
                     std::span<const double> w, std::span<double> out)
{
#if defined(HDGFLOW_HAVE_AVX2)
  if (active_backend() == Backend::Avx2)
    return avx2::weighted_moment(m, a, w, out);
#endif
  scalar::weighted_moment(m, a, w, out);
}

} // namespace hdgflow::simd

#if !defined(HDGFLOW_HAVE_AVX2)
namespace hdgflow::simd::avx2 {

void weighted_gram(std::size_t, std::size_t, std::span<const double>, std::span<const double>,
                   std::span<const double>, std::span<double>)
{
  throw std::logic_error("AVX2 kernels were not compiled into this build");
}

void weighted_moment(std::size_t, std::span<const double>, std::span<const double>, std::span<double>)
{
  throw std::logic_error("AVX2 kernels were not compiled into this build");
}

} // namespace hdgflow::simd::avx2
#endif
