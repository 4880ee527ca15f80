#pragma once

#include <Eigen/Dense>
#include <cstdint>

// Edge-weight subproblem: minimize over w >= 0
//   p^T w - alpha 1^T log(S w) + 2 beta ||w||^2
// via accelerated splitting on the Fenchel dual (momentum on the dual
// variable, closed-form prox of the log barrier).

namespace fgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct WSolverConfig {
  double alpha = 1.0;
  double beta = 0.01;
  double rel_tol = 1e-8;
  int max_iter = 5000;
  bool random_dual_init = false;  // omega ~ U[0.5, 1.5) instead of ones
  std::uint64_t dual_init_seed = 0;
};

struct WSolverResult {
  VectorXd w;
  int iterations = 0;
  double kkt_residual = 0.0;
  double rel_change = 0.0;
};

// Packed pairwise costs p_(ij) = (xi/N) ||X_i - X_j||^2 + mu ||U_i - U_j||^2
// over node rows; u may be null when mu = 0.
VectorXd pairwise_cost(const MatrixXd& x, const MatrixXd* u, double xi,
                       double mu);

WSolverResult solve_w(const VectorXd& p, const WSolverConfig& cfg);

// p^T w + Reg_w(w); +inf outside the barrier domain.
double w_objective(const VectorXd& p, const VectorXd& w, double alpha,
                   double beta);

// Projected-gradient norm of the KKT system at w (+inf outside the domain).
double w_kkt_residual(const VectorXd& p, const VectorXd& w, double alpha,
                      double beta);

}  // namespace fgc
