#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fgc/embedding.hpp"
#include "fgc/fairness.hpp"
#include "fgc/pipeline.hpp"

// Two end-to-end competitors that swap out the graph term: adaptive-neighbor
// simplex weights (row-wise closed form) and sparse self-representation
// (ALM with an l1 split variable).  Their embedding blocks are the shared
// pipeline operations, so those contracts carry over unchanged.

namespace fgc {

struct FjgsedConfig {
  int l = 10;  // neighbors kept per row, in [1, D-1]
  double mu_j = 0.01;
  double gamma_j = 0.01;
  int max_iter = 50;
  double rel_tol = 1e-6;
  std::uint64_t seed = 1;
  bool random_rotation_init = false;
  StiefelConfig stiefel{};
};

struct FsrscConfig {
  double alpha_u = 0.01;
  double mu_u = 0.01;
  double gamma_u = 1.0;  // consensus weight, also the rotation weight
  int max_iter = 50;
  double rel_tol = 1e-6;
  std::uint64_t seed = 1;
  bool random_rotation_init = false;
  // Flips the embedding-distance term in the column system (the re-derived
  // form subtracts it; the flipped form is kept for comparison).
  bool alternate_w_sign = false;
  // Scale each node's signal row to unit norm for the representation stage.
  // Keeps the Gram matrix, the consensus constant, and the rotation weight on
  // one scale; without it the ridge-like column solve pushes every
  // off-diagonal negative whenever gamma_u is small next to the signal
  // energy, and the nonnegativity projection then empties the graph.
  bool normalize_signals = true;
  StiefelConfig stiefel{};
};

// Simplex weights for one row given its cost row (self entry +inf): the l
// cheapest entries get (C_(l+1) - C_j) / (l C_(l+1) - sum of l cheapest),
// everything else 0.  An all-equal window falls back to uniform 1/l.
// Sums to 1 exactly; at most l nonzeros.
Eigen::VectorXd fjgsed_w_row(const Eigen::VectorXd& costs, int l);

// Alternates row-wise simplex weights on costs
// ||X_i-X_j||^2 + (mu_j/2) ||U_i-U_j||^2 with the shared embedding blocks.
// row_sum_errors, if given, records per sweep the max |row sum - 1| of W
// before symmetrization.
FitResult fjgsed_fit(const Eigen::MatrixXd& x, const FairnessSystem& fs, int k,
                     const FjgsedConfig& cfg,
                     std::vector<double>* row_sum_errors = nullptr);

// Elementwise max(|J| - threshold, 0) * sign(J).
Eigen::MatrixXd fsrsc_soft_threshold(const Eigen::MatrixXd& j,
                                     double threshold);

// Pre-projection W of the self-representation step: every column solves
// (gamma_u I + 2 X X^T) W_col = gamma_u Jt_col + 2 (X X^T)_col -+ (mu_u/2) P_col
// where P is the pairwise squared-distance matrix of the embedding rows.
Eigen::MatrixXd fsrsc_w_update(const Eigen::MatrixXd& xxt,
                               const Eigen::MatrixXd& j_tilde,
                               const Eigen::MatrixXd& p_u, double mu_u,
                               double gamma_u, bool alternate_sign);

// ALM on the split A = W with l1 shrinkage on A, followed by the shared
// embedding blocks each outer iteration.  primal_residuals, if given,
// records ||A - W||_F after each iteration's projection.
FitResult fsrsc_fit(const Eigen::MatrixXd& x, const FairnessSystem& fs, int k,
                    const FsrscConfig& cfg,
                    std::vector<double>* primal_residuals = nullptr);

}  // namespace fgc
