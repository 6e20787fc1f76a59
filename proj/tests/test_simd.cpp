#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "hdgflow/analysis.hpp"
#include "hdgflow/simd.hpp"

using namespace hdgflow;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v)
    x = u(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct BackendGuard {
  simd::Backend saved = simd::active_backend();
  ~BackendGuard() { simd::set_backend(saved); }
};

} // namespace

TEST_CASE("scalar kernels match a naive triple loop")
{
  std::mt19937_64 rng(1);
  const std::size_t rows = 7, m = 5, n = 3;
  const auto a = random_vector(rows * m, rng), b = random_vector(rows * n, rng), w = random_vector(rows, rng);
  std::vector<double> c(m * n, 0.0), ref(m * n, 0.0);
  simd::scalar::weighted_gram(m, n, a, b, w, c);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t r = 0; r < rows; ++r)
        ref[i * n + j] += w[r] * a[r * m + i] * b[r * n + j];
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-14));

  std::vector<double> mo(m, 0.0), mref(m, 0.0);
  simd::scalar::weighted_moment(m, a, w, mo);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < rows; ++r)
      mref[i] += w[r] * a[r * m + i];
  for (std::size_t i = 0; i < m; ++i)
    CHECK(mo[i] == doctest::Approx(mref[i]).epsilon(1e-14));
}

#if defined(HDGFLOW_HAVE_AVX2)
TEST_CASE("AVX2 kernels are bit-identical to the scalar reference")
{
  if (!simd::backend_supported(simd::Backend::Avx2))
    return;
  std::mt19937_64 rng(2);
  // sizes around the vector width, including remainders
  for (std::size_t rows : {1u, 3u, 16u, 37u})
    for (std::size_t m : {1u, 3u, 4u, 6u, 10u, 21u})
      for (std::size_t n : {1u, 2u, 5u, 8u, 15u}) {
        const auto a = random_vector(rows * m, rng), b = random_vector(rows * n, rng);
        const auto w = random_vector(rows, rng), c0 = random_vector(m * n, rng);
        std::vector<double> cs = c0, cv = c0;
        simd::scalar::weighted_gram(m, n, a, b, w, cs);
        simd::avx2::weighted_gram(m, n, a, b, w, cv);
        CHECK(same_bits(cs, cv));
        const auto o0 = random_vector(m, rng);
        std::vector<double> os = o0, ov = o0;
        simd::scalar::weighted_moment(m, a, w, os);
        simd::avx2::weighted_moment(m, a, w, ov);
        CHECK(same_bits(os, ov));
      }
}

TEST_CASE("a full solve is bit-identical across SIMD backends")
{
  if (!simd::backend_supported(simd::Backend::Avx2))
    return;
  BackendGuard guard;
  const ManufacturedCase mc = make_example1(0.1, KappaChoice::Kappa1);
  ConvergenceOptions opt;
  opt.k = 2;
  opt.levels = 1;
  opt.solver.picard_max_iter = 3;
  simd::set_backend(simd::Backend::Scalar);
  const ConvergenceReport a = run_convergence(mc, opt, true);
  simd::set_backend(simd::Backend::Avx2);
  const ConvergenceReport b = run_convergence(mc, opt, true);
  CHECK(std::memcmp(&a.levels[0].errors.err_E_u, &b.levels[0].errors.err_E_u, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.levels[0].errors.err_L2_p, &b.levels[0].errors.err_L2_p, sizeof(double)) == 0);
}
#endif

TEST_CASE("backend names")
{
  CHECK(simd::backend_name(simd::Backend::Scalar) == "scalar");
  CHECK(simd::backend_name(simd::Backend::Avx2) == "avx2");
  CHECK(simd::backend_supported(simd::Backend::Scalar));
}
