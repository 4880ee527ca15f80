#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "fgc/filter.hpp"
#include "fgc/graph.hpp"
#include "fgc/rng.hpp"
#include "fgc/synthetic.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Instance {
  MatrixXd x_obs;
  MatrixXd lap;
  VectorXd upsilon;
};

Instance random_instance(std::uint64_t seed, Index d, Index n) {
  fgc::VsbmParams p;
  p.num_nodes = d;
  p.num_clusters = 2;
  p.num_groups = 2;
  const auto gt = fgc::vsbm_generate(p, seed);
  Instance inst;
  inst.lap = fgc::laplacian_from_weights(gt.w);
  fgc::Rng rng(seed + 17);
  inst.x_obs.resize(d, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < d; ++i) inst.x_obs(i, j) = rng.normal();
  inst.upsilon.resize(d);
  for (Index i = 0; i < d; ++i) inst.upsilon[i] = rng.uniform(0.5, 3.0);
  return inst;
}

}  // namespace

TEST_CASE("zero smoothing returns the observations untouched") {
  const auto inst = random_instance(1, 8, 5);
  const MatrixXd x = fgc::denoise(inst.x_obs, inst.lap, inst.upsilon, 0.0);
  CHECK((x - inst.x_obs).norm() == 0.0);
}

TEST_CASE("zero laplacian makes the filter an identity") {
  const auto inst = random_instance(2, 8, 5);
  const MatrixXd zero_lap = MatrixXd::Zero(8, 8);
  const MatrixXd x = fgc::denoise(inst.x_obs, zero_lap, inst.upsilon, 0.5);
  CHECK((x - inst.x_obs).norm() < 1e-10);
}

TEST_CASE("conjugate gradients matches a dense direct solve") {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const Index d = 32, n = 6;
    const auto inst = random_instance(seed, d, n);
    const double xi = 0.4;
    const MatrixXd x = fgc::denoise(inst.x_obs, inst.lap, inst.upsilon, xi);

    const MatrixXd sys =
        MatrixXd(inst.upsilon.asDiagonal()) + xi * inst.lap;
    const MatrixXd rhs = inst.upsilon.asDiagonal() * inst.x_obs;
    const MatrixXd direct = sys.ldlt().solve(rhs);
    CHECK((x - direct).norm() <= 1e-8 * (1.0 + direct.norm()));

    // Each column satisfies the normal system to the CG tolerance.
    CHECK((sys * x - rhs).norm() <= 1e-7 * rhs.norm());
  }
}

TEST_CASE("strong smoothing pulls signals to the weighted mean") {
  // As xi grows the solution approaches the minimizer of Tr(X' L X) subject
  // to staying near the data only through the null space: for a connected
  // graph that is the upsilon-weighted column mean replicated on all nodes.
  const auto inst = random_instance(6, 12, 4);
  const MatrixXd x =
      fgc::denoise(inst.x_obs, inst.lap, inst.upsilon, 1e6);
  const Eigen::RowVectorXd mean =
      (inst.upsilon.transpose() * inst.x_obs) / inst.upsilon.sum();
  for (Index i = 0; i < 12; ++i)
    CHECK((x.row(i) - mean).norm() <= 1e-3 * (1.0 + mean.norm()));
}

TEST_CASE("filtering never roughens the signals") {
  // With uniform weights the filter is a spectral shrinkage: smoothness of
  // the output cannot exceed that of the input.
  for (std::uint64_t seed : {7u, 8u}) {
    const auto inst = random_instance(seed, 12, 5);
    const VectorXd uni = VectorXd::Ones(12);
    for (double xi : {0.01, 0.1, 1.0, 10.0}) {
      const MatrixXd x = fgc::denoise(inst.x_obs, inst.lap, uni, xi);
      CHECK(fgc::smoothness(x, inst.lap) <=
            fgc::smoothness(inst.x_obs, inst.lap) * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("warm starts do not change the solution") {
  const auto inst = random_instance(9, 16, 4);
  const MatrixXd cold = fgc::denoise(inst.x_obs, inst.lap, inst.upsilon, 0.7);
  MatrixXd guess = cold;
  guess.array() += 0.05;
  const MatrixXd warm = fgc::denoise(inst.x_obs, inst.lap, inst.upsilon, 0.7,
                                     fgc::DenoiseOptions{}, &guess);
  CHECK((cold - warm).norm() <= 1e-8 * (1.0 + cold.norm()));
}

TEST_CASE("noise weight update inverts the residual norm") {
  const Index d = 4, n = 16;
  MatrixXd x_obs = MatrixXd::Zero(d, n);
  MatrixXd x = MatrixXd::Zero(d, n);

  // Row 0: residual norm 2 on N=16 gives sqrt(16)/2 = 2.
  x_obs(0, 0) = 2.0;
  // Row 1: residual norm sqrt(16)*0.25 = 1 gives 4.
  x.row(1).setConstant(0.25);
  // Row 2: zero residual hits the cap.
  // Row 3: residual norm 8 gives 0.5.
  x_obs(3, 0) = 8.0;

  const VectorXd ups = fgc::update_upsilon(x_obs, x);
  REQUIRE(ups.size() == d);
  CHECK(ups[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ups[1] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(ups[2] == fgc::kUpsilonMax);
  CHECK(ups[3] == doctest::Approx(0.5).epsilon(1e-14));

  // Uncapped rows satisfy upsilon * residual = sqrt(N) identically.
  fgc::Rng rng(10);
  MatrixXd a(d, n), b(d, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < d; ++i) {
      a(i, j) = rng.normal();
      b(i, j) = rng.normal();
    }
  const VectorXd u = fgc::update_upsilon(a, b);
  for (Index i = 0; i < d; ++i) {
    const double res = (a.row(i) - b.row(i)).norm();
    CHECK(u[i] * res == doctest::Approx(std::sqrt(double(n))).epsilon(1e-12));
  }
}
