#pragma once

// Quadrature accumulation kernels with a scalar reference path and
// vectorized variants chosen at runtime.
//
// Every variant performs, for each output entry, the same sequence of
// multiplies and adds in the same order as the scalar reference, so the
// results are bit-identical across backends (the project is compiled with
// -ffp-contract=off).

#include <cstddef>
#include <span>
#include <string_view>

namespace hdgflow::simd {

enum class Backend { Scalar, Avx2 };

/// Backend used by the dispatching entry points below: AVX2 when the CPU
/// has it, until set_backend says otherwise.
Backend active_backend();
void set_backend(Backend backend);
bool backend_supported(Backend backend);
std::string_view backend_name(Backend backend);

/// c(m x n, row-major) += sum_r w[r] * a(r, :)^T b(r, :)
/// a is rows x m row-major, b is rows x n row-major.
void weighted_gram(std::size_t m, std::size_t n, std::span<const double> a,
                   std::span<const double> b, std::span<const double> w,
                   std::span<double> c);

/// out(m) += sum_r w[r] * a(r, :), a is rows x m row-major.
void weighted_moment(std::size_t m, std::span<const double> a,
                     std::span<const double> w, std::span<double> out);

namespace scalar {
void weighted_gram(std::size_t m, std::size_t n, std::span<const double> a,
                   std::span<const double> b, std::span<const double> w,
                   std::span<double> c);
void weighted_moment(std::size_t m, std::span<const double> a,
                     std::span<const double> w, std::span<double> out);
} // namespace scalar

namespace avx2 {
// Only callable when backend_supported(Backend::Avx2).
void weighted_gram(std::size_t m, std::size_t n, std::span<const double> a,
                   std::span<const double> b, std::span<const double> w,
                   std::span<double> c);
void weighted_moment(std::size_t m, std::span<const double> a,
                     std::span<const double> w, std::span<double> out);
} // namespace avx2

} // namespace hdgflow::simd
