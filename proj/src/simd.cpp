#include "chaos_approx/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace chaos::simd {

namespace detail {

// Neumaier variant of Kahan summation: also correct when the addend is
// larger than the running sum.
double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i];
    const double t = s + x;
    if ((s >= 0 ? s : -s) >= (x >= 0 ? x : -x))
      carry += (s - t) + x;
    else
      carry += (x - t) + s;
    s = t;
  }
  return s + carry;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i] * b[i];
    const double t = s + x;
    if ((s >= 0 ? s : -s) >= (x >= 0 ? x : -x))
      carry += (s - t) + x;
    else
      carry += (x - t) + s;
    s = t;
  }
  return s + carry;
}

#if defined(__x86_64__) || defined(_M_X64)

// 4-lane Kahan accumulators; lanes are combined with the scalar Neumaier sum.
__attribute__((target("avx2,fma"))) double dot_avx2(const double* a, const double* b,
                                                    std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d y = _mm256_sub_pd(p, c);
    const __m256d t = _mm256_add_pd(s, y);
    c = _mm256_sub_pd(_mm256_sub_pd(t, s), y);
    s = t;
  }
  alignas(32) double lanes[8];
  _mm256_store_pd(lanes, s);
  _mm256_store_pd(lanes + 4, _mm256_sub_pd(_mm256_setzero_pd(), c));
  double head = sum_scalar(lanes, 8);
  double tail = 0.0, tc = 0.0;
  for (; i < n; ++i) {
    const double y = a[i] * b[i] - tc;
    const double t = tail + y;
    tc = (t - tail) - y;
    tail = t;
  }
  return head + tail;
}

__attribute__((target("avx2"))) double sum_avx2(const double* a, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_sub_pd(_mm256_loadu_pd(a + i), c);
    const __m256d t = _mm256_add_pd(s, y);
    c = _mm256_sub_pd(_mm256_sub_pd(t, s), y);
    s = t;
  }
  alignas(32) double lanes[8];
  _mm256_store_pd(lanes, s);
  _mm256_store_pd(lanes + 4, _mm256_sub_pd(_mm256_setzero_pd(), c));
  double head = sum_scalar(lanes, 8);
  return head + sum_scalar(a + i, n - i);
}

static bool avx2_available() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

#endif  // x86_64

}  // namespace detail

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using SumFn = double (*)(const double*, std::size_t);

struct Dispatch {
  DotFn dot = nullptr;
  SumFn sum = nullptr;
  const char* name = "scalar";
};

Dispatch pick(Backend backend) {
  Dispatch d{detail::dot_scalar, detail::sum_scalar, "scalar"};
#if defined(__x86_64__) || defined(_M_X64)
  const bool want_avx2 =
      backend == Backend::Avx2 || (backend == Backend::Auto && detail::avx2_available());
  if (want_avx2 && detail::avx2_available()) {
    d = Dispatch{detail::dot_avx2, detail::sum_avx2, "avx2"};
  }
#else
  (void)backend;
#endif
  return d;
}

Dispatch& dispatch() {
  static Dispatch d = pick(Backend::Auto);
  return d;
}

}  // namespace

void set_backend(Backend backend) { dispatch() = pick(backend); }

const char* active_backend() { return dispatch().name; }

double dot(const double* a, const double* b, std::size_t n) { return dispatch().dot(a, b, n); }

double sum(const double* a, std::size_t n) { return dispatch().sum(a, n); }

}  // namespace chaos::simd
