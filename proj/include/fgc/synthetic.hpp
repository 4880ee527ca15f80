#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

// Synthetic benchmark: a block model with both cluster and group structure
// (edge probability depends on cluster and group co-membership), plus smooth
// signals drawn from the pseudoinverse of the planted Laplacian with
// per-node observation noise.

namespace fgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct VsbmParams {
  Eigen::Index num_nodes = 96;
  int num_clusters = 4;
  int num_groups = 2;
  // Edge probabilities: same cluster & group, same cluster only,
  // same group only, neither.
  double a = 0.8;
  double b = 0.2;
  double c = 0.15;
  double d = 0.05;
  double weight_lo = 0.1;
  double weight_hi = 2.0;
  // Group fractions; empty means equal (1/S each) with the exact
  // interleaved layout (requires K*S | D).
  std::vector<double> zeta;
  int max_retries = 20;
};

struct GroundTruth {
  Eigen::Index num_nodes = 0;
  int num_clusters = 0;
  int num_groups = 0;
  VectorXd w;                   // packed weights, scaled so Tr(L) = D
  std::vector<int> clusters;    // 0-based
  std::vector<int> groups;      // 0-based
};

// Deterministic for a fixed seed.  Redraws (up to max_retries) when the
// sampled graph has an isolated node; throws std::runtime_error after that.
GroundTruth vsbm_generate(const VsbmParams& params, std::uint64_t seed);

struct NoiseSpec {
  VectorXd sigma;        // explicit per-node std devs when non-empty
  double lo = 0.0;       // otherwise sigma_i ~ U[lo, hi]
  double hi = 0.0;
};

struct SignalSample {
  MatrixXd x;            // D x N, columns ~ N(0, pinv(L*) + diag(sigma^2))
  VectorXd sigma;        // realized noise levels
};

// Draw order is pinned: sigma first (when sampled), then the Gaussian
// matrix column by column.  Pseudoinverse eigenvalue cutoff is
// 1e-10 * lambda_max.
SignalSample sample_signals(const GroundTruth& gt, Eigen::Index n,
                            const NoiseSpec& noise, std::uint64_t seed);

}  // namespace fgc
