#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fgc/embedding.hpp"
#include "fgc/fairness.hpp"
#include "fgc/graph.hpp"
#include "fgc/rng.hpp"
#include "fgc/synthetic.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Setup {
  MatrixXd lap;
  fgc::FairnessSystem fs;
  std::vector<int> clusters;
};

Setup block_setup(Index d, int k, int s, std::uint64_t seed) {
  fgc::VsbmParams p;
  p.num_nodes = d;
  p.num_clusters = k;
  p.num_groups = s;
  const auto gt = fgc::vsbm_generate(p, seed);
  Setup su;
  su.lap = fgc::laplacian_from_weights(gt.w);
  su.fs = fgc::build_fairness_system(gt.groups);
  su.clusters = gt.clusters;
  return su;
}

}  // namespace

TEST_CASE("fair eigenvectors solve the reduced trace minimization") {
  const auto su = block_setup(16, 2, 2, 3);
  const int k = 2;
  const MatrixXd y = fgc::fair_embed_eigen(su.lap, su.fs, k);
  REQUIRE(y.rows() == su.fs.z.cols());
  REQUIRE(y.cols() == k);
  CHECK((y.transpose() * y - MatrixXd::Identity(k, k)).norm() < 1e-10);

  const MatrixXd m = su.fs.z.transpose() * su.lap * su.fs.z;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const double want = es.eigenvalues().head(k).sum();
  const double got = (y.transpose() * m * y).trace();
  CHECK(got == doctest::Approx(want).epsilon(1e-10));

  // U = Z Y satisfies the proportionality constraint by construction.
  CHECK((su.fs.f.transpose() * su.fs.z * y).norm() < 1e-10);
}

TEST_CASE("with a single group the fair embedding is plain spectral") {
  // Z is then a complete orthonormal basis, so the embedded trace equals the
  // sum of the K smallest Laplacian eigenvalues.
  const auto gt = fgc::vsbm_generate(fgc::VsbmParams{}, 5);
  const MatrixXd lap = fgc::laplacian_from_weights(gt.w);
  const auto fs = fgc::build_fairness_system(std::vector<int>(96, 0));
  const MatrixXd y = fgc::fair_embed_eigen(lap, fs, 4);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(lap);
  const MatrixXd u = fs.z * y;
  CHECK((u.transpose() * lap * u).trace() ==
        doctest::Approx(es.eigenvalues().head(4).sum()).epsilon(1e-9));
}

TEST_CASE("stiefel descent with no rotation term matches the eigen optimum") {
  fgc::Rng rng(7);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 200 && checked < 20; ++seed) {
    const Index d = 8 + 4 * Index(seed % 9);  // up to 40
    const auto su = block_setup(d, 2, 2, seed);
    const int k = 2;
    const double mu = 0.05;
    const MatrixXd m = su.fs.z.transpose() * su.lap * su.fs.z;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    // Skip near-degenerate spectra where the minimizing subspace is
    // ill-determined and descent may stall next to a saddle.
    if (es.eigenvalues()[k] - es.eigenvalues()[k - 1] < 1e-3) continue;
    const MatrixXd y0 =
        fgc::random_orthonormal(su.fs.z.cols(), k, rng.next_u64());
    const MatrixXd q = MatrixXd::Zero(d, k);
    const MatrixXd r = MatrixXd::Identity(k, k);
    const auto res =
        fgc::stiefel_minimize(su.lap, su.fs, q, r, mu, 0.0, y0);
    const double want = mu * es.eigenvalues().head(k).sum();
    // Relative gap with an absolute floor: a disconnected draw makes the
    // optimum numerically zero, where both sides are eigensolver noise.
    CHECK(std::abs(res.objective - want) <=
          1e-6 * std::max(std::abs(want), 1e-6));
    CHECK(res.max_feasibility_drift <= 1e-8);
    CHECK((res.y.transpose() * res.y - MatrixXd::Identity(k, k)).norm() <
          1e-8);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("stiefel descent with no graph term maximizes rotation alignment") {
  // mu = 0 turns the problem into max Tr(R Q^T Z Y) over the Stiefel
  // manifold, whose optimum is the nuclear norm of Z^T Q R^T.
  fgc::Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Index d = 12;
    const int k = 3;
    const auto su = block_setup(d, 3, 2, 40 + std::uint64_t(trial));
    MatrixXd q(d, k);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < k; ++j) q(i, j) = rng.normal();
    const MatrixXd r = fgc::random_orthonormal(k, k, rng.next_u64());
    const double gamma = 0.7;

    const MatrixXd y0 =
        fgc::random_orthonormal(su.fs.z.cols(), k, rng.next_u64());
    const auto res = fgc::stiefel_minimize(su.lap, su.fs, q, r, 0.0, gamma,
                                           y0);
    Eigen::JacobiSVD<MatrixXd> svd(su.fs.z.transpose() * q * r.transpose());
    const double want = -2.0 * gamma * svd.singularValues().sum();
    CHECK(res.objective ==
          doctest::Approx(want).epsilon(1e-6).scale(std::fabs(want)));
  }
}

TEST_CASE("descent is monotone, feasible, and beats its warm start") {
  const auto su = block_setup(24, 4, 2, 9);
  const int k = 4;
  fgc::Rng rng(13);
  MatrixXd q = fgc::scaled_indicator(su.clusters, k);
  const MatrixXd r = fgc::random_orthonormal(k, k, rng.next_u64());
  const MatrixXd y0 = fgc::random_orthonormal(su.fs.z.cols(), k, 77);
  const double mu = 0.2, gamma = 0.4;

  const double f0 =
      fgc::stiefel_objective(su.lap, su.fs, q, r, mu, gamma, y0);
  const auto res = fgc::stiefel_minimize(su.lap, su.fs, q, r, mu, gamma, y0);
  CHECK(res.objective <= f0 + 1e-12);
  CHECK(res.objective ==
        doctest::Approx(fgc::stiefel_objective(su.lap, su.fs, q, r, mu, gamma,
                                               res.y))
            .epsilon(1e-10));
  CHECK(res.max_feasibility_drift <= 1e-8);
  CHECK(res.grad_norm >= 0.0);
}

TEST_CASE("objective matches the quadratic-plus-alignment form") {
  const auto su = block_setup(12, 2, 2, 21);
  const int k = 2;
  fgc::Rng rng(17);
  MatrixXd q(12, k);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < k; ++j) q(i, j) = rng.normal();
  const MatrixXd r = fgc::random_orthonormal(k, k, 5);
  const MatrixXd y = fgc::random_orthonormal(su.fs.z.cols(), k, 6);
  const double mu = 0.3, gamma = 0.9;

  const MatrixXd u = su.fs.z * y;
  const double want = mu * (u.transpose() * su.lap * u).trace() -
                      2.0 * gamma * (r * q.transpose() * u).trace();
  CHECK(fgc::stiefel_objective(su.lap, su.fs, q, r, mu, gamma, y) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("euclidean gradient of the objective is 2 mu M Y - 2 gamma Z'QR'") {
  const auto su = block_setup(12, 2, 2, 23);
  const int k = 2;
  fgc::Rng rng(19);
  MatrixXd q(12, k);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < k; ++j) q(i, j) = rng.normal();
  const MatrixXd r = fgc::random_orthonormal(k, k, 8);
  const MatrixXd y = fgc::random_orthonormal(su.fs.z.cols(), k, 9);
  const double mu = 0.4, gamma = 0.6;

  const MatrixXd m = su.fs.z.transpose() * su.lap * su.fs.z;
  const MatrixXd grad =
      2.0 * mu * m * y - 2.0 * gamma * su.fs.z.transpose() * q * r.transpose();

  // Directional finite differences of the unconstrained objective.
  const double h = 1e-5;
  for (int probe = 0; probe < 5; ++probe) {
    MatrixXd dir(y.rows(), y.cols());
    for (Index i = 0; i < dir.rows(); ++i)
      for (Index j = 0; j < dir.cols(); ++j) dir(i, j) = rng.normal();
    dir /= dir.norm();
    const double fp = fgc::stiefel_objective(su.lap, su.fs, q, r, mu, gamma,
                                             y + h * dir);
    const double fm = fgc::stiefel_objective(su.lap, su.fs, q, r, mu, gamma,
                                             y - h * dir);
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(fd == doctest::Approx((grad.array() * dir.array()).sum())
                    .epsilon(1e-5));
  }
}

TEST_CASE("random orthonormal frames are orthonormal and seeded") {
  const MatrixXd a = fgc::random_orthonormal(9, 4, 3);
  CHECK((a.transpose() * a - MatrixXd::Identity(4, 4)).norm() < 1e-12);
  const MatrixXd b = fgc::random_orthonormal(9, 4, 3);
  CHECK((a - b).norm() == 0.0);
  const MatrixXd c = fgc::random_orthonormal(9, 4, 4);
  CHECK((a - c).norm() > 0.0);
}
