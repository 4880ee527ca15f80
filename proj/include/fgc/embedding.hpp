#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "fgc/fairness.hpp"

// Fair spectral embedding.  With U = Z Y the fairness constraint is exact,
// and the embedding problem becomes minimization over the Stiefel manifold:
//   phi(Y) = mu Tr(Y^T Z^T L Z Y) - 2 gamma Tr(R Q^T Z Y),  Y^T Y = I.

namespace fgc {

struct StiefelConfig {
  int max_iter = 1000;
  double grad_tol = 1e-7;
  double armijo_rho = 1e-4;
  double step_shrink = 0.5;
  int max_backtracks = 60;
};

struct StiefelResult {
  MatrixXd y;
  int iterations = 0;
  double grad_norm = 0.0;
  double objective = 0.0;
  double max_feasibility_drift = 0.0;  // max ||Y^T Y - I||_inf across iterates
};

// K smallest-eigenvalue eigenvectors of Z^T L Z.
MatrixXd fair_embed_eigen(const MatrixXd& lap, const FairnessSystem& fs, int k);

// Monotone curvilinear descent (Cayley retraction, Barzilai-Borwein trial
// step, Armijo backtracking) from the feasible warm start y0.
StiefelResult stiefel_minimize(const MatrixXd& lap, const FairnessSystem& fs,
                               const MatrixXd& q, const MatrixXd& r, double mu,
                               double gamma, const MatrixXd& y0,
                               const StiefelConfig& cfg = {});

double stiefel_objective(const MatrixXd& lap, const FairnessSystem& fs,
                         const MatrixXd& q, const MatrixXd& r, double mu,
                         double gamma, const MatrixXd& y);

// Seeded orthonormal (D-S+1) x K matrix (QR of a Gaussian draw).
MatrixXd random_orthonormal(Eigen::Index rows, Eigen::Index cols,
                            std::uint64_t seed);

}  // namespace fgc
