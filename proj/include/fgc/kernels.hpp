#pragma once

#include <cstddef>

// Low-level array kernels behind the hot loops (pairwise distance assembly,
// the elementwise steps of the dual weight solver, soft-thresholding).
// Each kernel has a scalar reference implementation and an AVX2 variant;
// the active set is chosen once at runtime from CPU features.  The scalar
// namespace defines the semantics, SIMD variants must match it up to
// floating-point summation reordering.

namespace fgc::kernels {

struct Ops {
  // sum_k a[k]*b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_k (a[k]-b[k])^2
  double (*sqdist)(const double* a, const double* b, std::size_t n);
  // sum_k v[k]
  double (*sum)(const double* v, std::size_t n);
  // out[k] = s + v[k]
  void (*add_scalar)(double* out, double s, const double* v, std::size_t n);
  // out[k] = max((a[k] - 2*p[k]) * inv4beta, 0)
  void (*clamp_step)(double* out, const double* a, const double* p,
                     double inv4beta, std::size_t n);
  // u = sw - lip*omega; v[k] = (u + sqrt(u^2 + 4*lip))/2;
  // r[k] = omega[k] - (sw[k] - v[k])/lip
  void (*dual_prox)(double* v, double* r, const double* sw,
                    const double* omega, double lip, std::size_t n);
  // out[k] = sign(x[k]) * max(|x[k]| - t, 0)
  void (*soft_threshold)(double* out, const double* x, double t,
                         std::size_t n);
  const char* name;
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* v, std::size_t n);
void add_scalar(double* out, double s, const double* v, std::size_t n);
void clamp_step(double* out, const double* a, const double* p, double inv4beta,
                std::size_t n);
void dual_prox(double* v, double* r, const double* sw, const double* omega,
               double lip, std::size_t n);
void soft_threshold(double* out, const double* x, double t, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* v, std::size_t n);
void add_scalar(double* out, double s, const double* v, std::size_t n);
void clamp_step(double* out, const double* a, const double* p, double inv4beta,
                std::size_t n);
void dual_prox(double* v, double* r, const double* sw, const double* omega,
               double lip, std::size_t n);
void soft_threshold(double* out, const double* x, double t, std::size_t n);
}  // namespace avx2
#endif

// True when the running CPU supports the AVX2+FMA variants.
bool simd_available();

// Active kernel set.  Defaults to the widest supported variant; tests may
// pin the scalar set to compare paths on identical inputs.
const Ops& active();
void force_scalar(bool on);

const Ops& scalar_ops();
#if defined(__x86_64__)
const Ops& avx2_ops();
#endif

}  // namespace fgc::kernels
