#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "fgc/graph.hpp"
#include "fgc/learner.hpp"
#include "fgc/rng.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_costs(fgc::Rng& rng, Index d, double hi = 2.0) {
  VectorXd p(fgc::edge_count(d));
  for (Index k = 0; k < p.size(); ++k) p[k] = rng.uniform(0.0, hi);
  return p;
}

// Projected gradient with Armijo backtracking on the primal objective.
// Slow but independent of the dual solver; the barrier is enforced by
// treating out-of-domain points as +inf.
VectorXd pg_oracle(const VectorXd& p, double alpha, double beta, int steps) {
  VectorXd w = VectorXd::Constant(p.size(), 0.5);
  double fw = fgc::w_objective(p, w, alpha, beta);
  for (int t = 0; t < steps; ++t) {
    const VectorXd deg = fgc::degree_apply(w);
    const VectorXd grad =
        p - alpha * fgc::degree_adjoint(deg.cwiseInverse()) + 4.0 * beta * w;
    double step = 1.0;
    bool moved = false;
    for (int back = 0; back < 60; ++back) {
      const VectorXd cand = (w - step * grad).cwiseMax(0.0);
      const double fc = fgc::w_objective(p, cand, alpha, beta);
      const double decrease = (w - cand).squaredNorm() / (2.0 * step);
      if (std::isfinite(fc) && fc <= fw - 1e-4 * decrease) {
        if ((w - cand).norm() <= 1e-15 * (1.0 + w.norm())) return cand;
        w = cand;
        fw = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return w;
}

}  // namespace

TEST_CASE("pairwise costs match the definition") {
  MatrixXd x(3, 2);
  x << 0, 0, 1, 0, 0, 2;
  // Squared row distances: (0,1)=1, (0,2)=4, (1,2)=5.
  const VectorXd p = fgc::pairwise_cost(x, nullptr, 1.0, 0.0);
  REQUIRE(p.size() == 3);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));   // xi/N = 1/2
  CHECK(p[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(2.5).epsilon(1e-14));

  MatrixXd u(3, 2);
  u << 1, 0, 0, 1, 0, 0;
  const VectorXd pu = fgc::pairwise_cost(x, &u, 1.0, 0.25);
  CHECK(pu[0] == doctest::Approx(0.5 + 0.25 * 2.0).epsilon(1e-14));
  CHECK(pu[1] == doctest::Approx(2.0 + 0.25 * 1.0).epsilon(1e-14));
  CHECK(pu[2] == doctest::Approx(2.5 + 0.25 * 1.0).epsilon(1e-14));

  // Brute-force oracle on a larger random instance.
  fgc::Rng rng(3);
  const Index d = 6, n = 4, ku = 3;
  MatrixXd xs(d, n), us(d, ku);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < n; ++j) xs(i, j) = rng.normal();
    for (Index j = 0; j < ku; ++j) us(i, j) = rng.normal();
  }
  const double xi = 0.7, mu = 0.3;
  const VectorXd got = fgc::pairwise_cost(xs, &us, xi, mu);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      const double want =
          xi / double(n) * (xs.row(i) - xs.row(j)).squaredNorm() +
          mu * (us.row(i) - us.row(j)).squaredNorm();
      CHECK(got[fgc::edge_slot(i, j, d)] ==
            doctest::Approx(want).epsilon(1e-12));
    }

  CHECK_THROWS_AS(fgc::pairwise_cost(xs, nullptr, 1.0, 0.5),
                  std::invalid_argument);
}

TEST_CASE("weight objective matches its closed form") {
  fgc::Rng rng(5);
  const Index d = 5;
  const VectorXd p = random_costs(rng, d);
  VectorXd w(fgc::edge_count(d));
  for (Index k = 0; k < w.size(); ++k) w[k] = rng.uniform(0.1, 1.0);
  const double alpha = 1.3, beta = 0.07;
  const double want = p.dot(w) -
                      alpha * fgc::degree_apply(w).array().log().sum() +
                      2.0 * beta * w.squaredNorm();
  CHECK(fgc::w_objective(p, w, alpha, beta) ==
        doctest::Approx(want).epsilon(1e-13));

  // Outside the barrier domain the objective is +inf.
  VectorXd zero = VectorXd::Zero(fgc::edge_count(d));
  CHECK(std::isinf(fgc::w_objective(p, zero, alpha, beta)));
  CHECK(std::isinf(fgc::w_kkt_residual(p, zero, alpha, beta)));
}

TEST_CASE("two-node problems recover the closed-form optimum") {
  // Single edge, cost p: minimize p w - 2 log w + 2 beta w^2.
  // p = 0, beta = 1/2: w* = 1.  p = 2, beta = 1/2: w* = (sqrt(5)-1)/2.
  fgc::WSolverConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 0.5;
  cfg.rel_tol = 1e-10;
  cfg.max_iter = 20000;

  VectorXd p(1);
  p << 0.0;
  CHECK(fgc::solve_w(p, cfg).w[0] == doctest::Approx(1.0).epsilon(1e-6));

  p << 2.0;
  CHECK(fgc::solve_w(p, cfg).w[0] ==
        doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-6));

  // General single-edge quadratic: 4 beta w^2 + p w - 2 alpha = 0.
  fgc::Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = rng.uniform(0.5, 2.0);
    const double beta = rng.uniform(0.05, 1.0);
    p[0] = rng.uniform(0.0, 3.0);
    const double root =
        (-p[0] + std::sqrt(p[0] * p[0] + 32.0 * beta * alpha)) / (8.0 * beta);
    fgc::WSolverConfig c2;
    c2.alpha = alpha;
    c2.beta = beta;
    c2.rel_tol = 1e-10;
    c2.max_iter = 20000;
    CHECK(fgc::solve_w(p, c2).w[0] == doctest::Approx(root).epsilon(1e-6));
  }
}

TEST_CASE("solver reaches its advertised optimality certificate") {
  fgc::Rng rng(11);
  for (Index d : {3, 5, 8}) {
    const VectorXd p = random_costs(rng, d);
    fgc::WSolverConfig cfg;
    const auto res = fgc::solve_w(p, cfg);
    CHECK(res.w.minCoeff() >= 0.0);
    CHECK(fgc::degree_apply(res.w).minCoeff() > fgc::kDegreeFloor);
    CHECK(res.kkt_residual <= cfg.rel_tol * (1.0 + p.norm()));
    CHECK(fgc::w_kkt_residual(p, res.w, cfg.alpha, cfg.beta) ==
          doctest::Approx(res.kkt_residual).epsilon(1e-12));
  }
}

TEST_CASE("solver agrees with a projected-gradient oracle") {
  fgc::Rng rng(13);
  for (Index d : {3, 4, 6}) {
    const VectorXd p = random_costs(rng, d, 1.5);
    fgc::WSolverConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.max_iter = 20000;
    const VectorXd w = fgc::solve_w(p, cfg).w;
    const VectorXd w_ref = pg_oracle(p, cfg.alpha, cfg.beta, 200000);
    const double f = fgc::w_objective(p, w, cfg.alpha, cfg.beta);
    const double f_ref = fgc::w_objective(p, w_ref, cfg.alpha, cfg.beta);
    // The dual solve must not be worse than the oracle beyond tolerance.
    CHECK(f <= f_ref + 1e-7 * (1.0 + std::fabs(f_ref)));
    CHECK((w - w_ref).norm() <= 1e-5 * (1.0 + w_ref.norm()));
  }
}

TEST_CASE("scaling alpha rescales the problem, not the answer") {
  fgc::Rng rng(17);
  const VectorXd p = random_costs(rng, 5);
  fgc::WSolverConfig a2;
  a2.alpha = 2.0;
  a2.beta = 0.04;
  a2.rel_tol = 1e-10;
  a2.max_iter = 20000;
  fgc::WSolverConfig a1;
  a1.alpha = 1.0;
  a1.beta = 0.02;
  a1.rel_tol = 1e-10;
  a1.max_iter = 20000;
  const VectorXd w2 = fgc::solve_w(p, a2).w;
  const VectorXd w1 = fgc::solve_w((p / 2.0).eval(), a1).w;
  CHECK((w2 - w1).norm() <= 1e-7 * (1.0 + w1.norm()));
}

TEST_CASE("heavier costs never strengthen an edge") {
  // Raising one pairwise cost weakly decreases that edge weight.
  fgc::Rng rng(19);
  const Index d = 3;
  VectorXd p = random_costs(rng, d, 1.0);
  fgc::WSolverConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.max_iter = 20000;
  double last = std::numeric_limits<double>::infinity();
  for (double bump : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    VectorXd pb = p;
    pb[0] += bump;
    const double w0 = fgc::solve_w(pb, cfg).w[0];
    CHECK(w0 <= last + 1e-8);
    last = w0;
  }
}

TEST_CASE("random dual starts land on the same minimizer") {
  fgc::Rng rng(23);
  const VectorXd p = random_costs(rng, 6);
  fgc::WSolverConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.max_iter = 20000;
  const VectorXd w_ones = fgc::solve_w(p, cfg).w;
  for (std::uint64_t s : {1, 2, 3}) {
    fgc::WSolverConfig rc = cfg;
    rc.random_dual_init = true;
    rc.dual_init_seed = s;
    CHECK((fgc::solve_w(p, rc).w - w_ones).norm() <=
          1e-6 * (1.0 + w_ones.norm()));
  }
}

TEST_CASE("solver input validation") {
  VectorXd p(1);
  p << -0.5;
  fgc::WSolverConfig cfg;
  CHECK_THROWS_AS(fgc::solve_w(p, cfg), std::invalid_argument);
  p << 1.0;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(fgc::solve_w(p, cfg), std::invalid_argument);
}
