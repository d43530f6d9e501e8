#pragma once

#include <cstddef>

namespace chaos::simd {

// Compensated accumulation kernels behind the dense quadrature sums.
// dot() and sum() keep a Kahan carry so that 1e6-term sums of magnitude
// 1/eps^n do not lose the low-order digits the equivalence tests check.
//
// A scalar reference implementation always exists; an AVX2 variant is
// selected at runtime when the CPU supports it. Both must agree within
// floating-point reassociation tolerance (see tests/test_simd.cpp).

enum class Backend { Auto, Scalar, Avx2 };

// Force a backend (tests use Scalar to cross-check); Auto re-detects.
void set_backend(Backend backend);

// Name of the backend that will actually run: "scalar" or "avx2".
const char* active_backend();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
double sum_scalar(const double* a, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* a, std::size_t n);
#endif
}  // namespace detail

}  // namespace chaos::simd
