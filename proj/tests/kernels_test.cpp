#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "fgc/kernels.hpp"
#include "fgc/rng.hpp"

namespace {

std::vector<double> random_vec(fgc::Rng& rng, std::size_t n, double lo,
                               double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Sizes straddling the 4-lane width to cover main loop and remainders.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 33, 67, 256};

}  // namespace

TEST_CASE("scalar kernels define the documented semantics") {
  fgc::Rng rng(7);
  for (std::size_t n : kSizes) {
    const auto a = random_vec(rng, n, -2.0, 2.0);
    const auto b = random_vec(rng, n, -2.0, 2.0);

    double dot = 0.0, sq = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      dot += a[k] * b[k];
      sq += (a[k] - b[k]) * (a[k] - b[k]);
      sum += a[k];
    }
    CHECK(fgc::kernels::scalar::dot(a.data(), b.data(), n) ==
          doctest::Approx(dot).epsilon(1e-14));
    CHECK(fgc::kernels::scalar::sqdist(a.data(), b.data(), n) ==
          doctest::Approx(sq).epsilon(1e-14));
    CHECK(fgc::kernels::scalar::sum(a.data(), n) ==
          doctest::Approx(sum).epsilon(1e-14));

    std::vector<double> out(n, -99.0);
    fgc::kernels::scalar::add_scalar(out.data(), 0.25, a.data(), n);
    for (std::size_t k = 0; k < n; ++k) CHECK(out[k] == 0.25 + a[k]);

    fgc::kernels::scalar::clamp_step(out.data(), a.data(), b.data(), 3.0, n);
    for (std::size_t k = 0; k < n; ++k)
      CHECK(out[k] == std::max((a[k] - 2.0 * b[k]) * 3.0, 0.0));

    fgc::kernels::scalar::soft_threshold(out.data(), a.data(), 0.5, n);
    for (std::size_t k = 0; k < n; ++k) {
      const double m = std::max(std::fabs(a[k]) - 0.5, 0.0);
      CHECK(out[k] == (a[k] > 0.0 ? m : -m));
    }
  }
}

TEST_CASE("scalar dual_prox satisfies the prox fixed-point algebra") {
  // v solves v - sw + lip*omega = 4*lip/(2v), i.e. v^2 - u v - lip = 0 with
  // u = sw - lip*omega; the code returns the positive root.
  fgc::Rng rng(11);
  const std::size_t n = 33;
  const auto sw = random_vec(rng, n, 0.1, 4.0);
  const auto omega = random_vec(rng, n, -1.0, 1.0);
  const double lip = 2.5;
  std::vector<double> v(n), r(n);
  fgc::kernels::scalar::dual_prox(v.data(), r.data(), sw.data(), omega.data(),
                                  lip, n);
  for (std::size_t k = 0; k < n; ++k) {
    CHECK(v[k] > 0.0);
    const double u = sw[k] - lip * omega[k];
    CHECK(std::fabs(v[k] * v[k] - u * v[k] - lip) <=
          1e-12 * std::max(1.0, v[k] * v[k]));
    CHECK(r[k] ==
          doctest::Approx(omega[k] - (sw[k] - v[k]) / lip).epsilon(1e-13));
  }
}

#if defined(__x86_64__)
TEST_CASE("avx2 kernels match scalar on identical inputs") {
  if (!fgc::kernels::simd_available()) {
    MESSAGE("avx2 not available on this cpu, skipping");
    return;
  }
  const auto& s = fgc::kernels::scalar_ops();
  const auto& a2 = fgc::kernels::avx2_ops();
  fgc::Rng rng(23);

  for (std::size_t n : kSizes) {
    const auto a = random_vec(rng, n, -3.0, 3.0);
    const auto b = random_vec(rng, n, -3.0, 3.0);
    const auto sw = random_vec(rng, n, 0.05, 5.0);
    const auto om = random_vec(rng, n, -1.5, 1.5);

    // Reductions may reorder summation; elementwise ops must agree to the
    // last bit up to FMA contraction of a single product.
    const double scale = 1.0 + static_cast<double>(n);
    CHECK(std::fabs(s.dot(a.data(), b.data(), n) -
                    a2.dot(a.data(), b.data(), n)) <= 1e-13 * scale);
    CHECK(std::fabs(s.sqdist(a.data(), b.data(), n) -
                    a2.sqdist(a.data(), b.data(), n)) <= 1e-13 * scale);
    CHECK(std::fabs(s.sum(a.data(), n) - a2.sum(a.data(), n)) <=
          1e-13 * scale);

    std::vector<double> o1(n), o2(n);
    s.add_scalar(o1.data(), 1.75, a.data(), n);
    a2.add_scalar(o2.data(), 1.75, a.data(), n);
    CHECK(o1 == o2);

    s.clamp_step(o1.data(), a.data(), b.data(), 12.5, n);
    a2.clamp_step(o2.data(), a.data(), b.data(), 12.5, n);
    CHECK(o1 == o2);

    s.soft_threshold(o1.data(), a.data(), 0.8, n);
    a2.soft_threshold(o2.data(), a.data(), 0.8, n);
    for (std::size_t k = 0; k < n; ++k) CHECK(o1[k] == o2[k]);

    std::vector<double> v1(n), r1(n), v2(n), r2(n);
    s.dual_prox(v1.data(), r1.data(), sw.data(), om.data(), 3.0, n);
    a2.dual_prox(v2.data(), r2.data(), sw.data(), om.data(), 3.0, n);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(v1[k] == doctest::Approx(v2[k]).epsilon(1e-14));
      CHECK(r1[k] == doctest::Approx(r2[k]).epsilon(1e-13));
    }
  }
}
#endif

TEST_CASE("runtime dispatch honors force_scalar") {
  const std::string active_default = fgc::kernels::active().name;
  fgc::kernels::force_scalar(true);
  CHECK(std::string(fgc::kernels::active().name) == "scalar");
  fgc::kernels::force_scalar(false);
  CHECK(std::string(fgc::kernels::active().name) == active_default);
#if defined(__x86_64__)
  if (fgc::kernels::simd_available()) CHECK(active_default == "avx2");
#endif
}
