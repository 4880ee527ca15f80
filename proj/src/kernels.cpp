#include "fgc/kernels.hpp"

#include <atomic>
#include <cmath>

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace fgc::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

double sqdist(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

double sum(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += v[k];
  return acc;
}

void add_scalar(double* out, double s, const double* v, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = s + v[k];
}

void clamp_step(double* out, const double* a, const double* p, double inv4beta,
                std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (a[k] - 2.0 * p[k]) * inv4beta;
    out[k] = w > 0.0 ? w : 0.0;
  }
}

void dual_prox(double* v, double* r, const double* sw, const double* omega,
               double lip, std::size_t n) {
  const double inv_lip = 1.0 / lip;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = sw[k] - lip * omega[k];
    const double vk = 0.5 * (u + std::sqrt(u * u + 4.0 * lip));
    v[k] = vk;
    r[k] = omega[k] - (sw[k] - vk) * inv_lip;
  }
}

void soft_threshold(double* out, const double* x, double t, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double m = std::fabs(x[k]) - t;
    out[k] = m > 0.0 ? (x[k] > 0.0 ? m : -m) : 0.0;
  }
}

}  // namespace scalar

#if defined(__x86_64__)

namespace avx2 {

namespace {
__attribute__((target("avx2,fma"))) inline double hsum(__m256d acc) {
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}
}  // namespace

__attribute__((target("avx2,fma")))
double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc);
  double r = hsum(acc);
  for (; k < n; ++k) r += a[k] * b[k];
  return r;
}

__attribute__((target("avx2,fma")))
double sqdist(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double r = hsum(acc);
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    r += d * d;
  }
  return r;
}

__attribute__((target("avx2,fma")))
double sum(const double* v, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + k));
  double r = hsum(acc);
  for (; k < n; ++k) r += v[k];
  return r;
}

__attribute__((target("avx2,fma")))
void add_scalar(double* out, double s, const double* v, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(out + k, _mm256_add_pd(sv, _mm256_loadu_pd(v + k)));
  for (; k < n; ++k) out[k] = s + v[k];
}

__attribute__((target("avx2,fma")))
void clamp_step(double* out, const double* a, const double* p, double inv4beta,
                std::size_t n) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d scale = _mm256_set1_pd(inv4beta);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d t = _mm256_fnmadd_pd(two, _mm256_loadu_pd(p + k),
                                 _mm256_loadu_pd(a + k));
    _mm256_storeu_pd(out + k, _mm256_max_pd(_mm256_mul_pd(t, scale), zero));
  }
  for (; k < n; ++k) {
    const double w = (a[k] - 2.0 * p[k]) * inv4beta;
    out[k] = w > 0.0 ? w : 0.0;
  }
}

__attribute__((target("avx2,fma")))
void dual_prox(double* v, double* r, const double* sw, const double* omega,
               double lip, std::size_t n) {
  const __m256d lipv = _mm256_set1_pd(lip);
  const __m256d inv_lip = _mm256_set1_pd(1.0 / lip);
  const __m256d four_lip = _mm256_set1_pd(4.0 * lip);
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d swv = _mm256_loadu_pd(sw + k);
    __m256d om = _mm256_loadu_pd(omega + k);
    __m256d u = _mm256_fnmadd_pd(lipv, om, swv);
    __m256d root = _mm256_sqrt_pd(_mm256_fmadd_pd(u, u, four_lip));
    __m256d vk = _mm256_mul_pd(half, _mm256_add_pd(u, root));
    _mm256_storeu_pd(v + k, vk);
    __m256d rk = _mm256_fnmadd_pd(_mm256_sub_pd(swv, vk), inv_lip, om);
    _mm256_storeu_pd(r + k, rk);
  }
  const double il = 1.0 / lip;
  for (; k < n; ++k) {
    const double u = sw[k] - lip * omega[k];
    const double vk = 0.5 * (u + std::sqrt(u * u + 4.0 * lip));
    v[k] = vk;
    r[k] = omega[k] - (sw[k] - vk) * il;
  }
}

__attribute__((target("avx2,fma")))
void soft_threshold(double* out, const double* x, double t, std::size_t n) {
  // |x| via sign-bit mask; sign restored by copying the bit back.
  const __m256d signbit = _mm256_set1_pd(-0.0);
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d xv = _mm256_loadu_pd(x + k);
    __m256d sign = _mm256_and_pd(xv, signbit);
    __m256d mag =
        _mm256_max_pd(_mm256_sub_pd(_mm256_andnot_pd(signbit, xv), tv), zero);
    _mm256_storeu_pd(out + k, _mm256_or_pd(mag, sign));
  }
  for (; k < n; ++k) {
    const double m = std::fabs(x[k]) - t;
    out[k] = m > 0.0 ? (x[k] > 0.0 ? m : -m) : 0.0;
  }
}

}  // namespace avx2

#endif  // __x86_64__

namespace {

constexpr Ops kScalarOps = {scalar::dot,        scalar::sqdist,
                            scalar::sum,        scalar::add_scalar,
                            scalar::clamp_step, scalar::dual_prox,
                            scalar::soft_threshold, "scalar"};

#if defined(__x86_64__)
constexpr Ops kAvx2Ops = {avx2::dot,        avx2::sqdist,
                          avx2::sum,        avx2::add_scalar,
                          avx2::clamp_step, avx2::dual_prox,
                          avx2::soft_threshold, "avx2"};
#endif

std::atomic<bool> g_force_scalar{false};

}  // namespace

bool simd_available() {
#if defined(__x86_64__)
  static const bool ok =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

const Ops& scalar_ops() { return kScalarOps; }

#if defined(__x86_64__)
const Ops& avx2_ops() { return kAvx2Ops; }
#endif

const Ops& active() {
#if defined(__x86_64__)
  if (!g_force_scalar.load(std::memory_order_relaxed) && simd_available())
    return kAvx2Ops;
#endif
  return kScalarOps;
}

void force_scalar(bool on) {
  g_force_scalar.store(on, std::memory_order_relaxed);
}

}  // namespace fgc::kernels
