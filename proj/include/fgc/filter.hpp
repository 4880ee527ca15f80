#pragma once

#include <Eigen/Dense>

// Node-adaptive denoising: solve (diag(upsilon) + xi L) X = diag(upsilon) X_o
// column by column with Jacobi-preconditioned conjugate gradients, and the
// closed-form weight update upsilon_i = sqrt(N) / ||row residual||.

namespace fgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kUpsilonMax = 1e6;

struct DenoiseOptions {
  double tol = 1e-10;        // relative residual per column
  int max_iter_factor = 10;  // cap = factor * D iterations per column
};

// Warm starts from `warm` when given (same shape), else from x_obs; with
// xi = 0 the observed signals are returned unchanged.
MatrixXd denoise(const MatrixXd& x_obs, const MatrixXd& lap,
                 const VectorXd& upsilon, double xi,
                 const DenoiseOptions& opts = {},
                 const MatrixXd* warm = nullptr);

// Capped at kUpsilonMax (rows with tiny residual).
VectorXd update_upsilon(const MatrixXd& x_obs, const MatrixXd& x);

}  // namespace fgc
