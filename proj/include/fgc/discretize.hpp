#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

// Rounding the continuous embedding: orthogonal alignment of U with a
// binary indicator (Procrustes), row-argmax assignment, and a Lloyd
// k-means fallback for the ablation path.

namespace fgc {

using Eigen::MatrixXd;

// argmax over orthogonal R of Tr(Q^T U R), from the SVD of Q^T U.
// Left singular vector columns are sign-pinned (largest-magnitude entry
// positive, ties to the smallest row index) so degenerate spectra still
// resolve deterministically.
MatrixXd procrustes_rotation(const MatrixXd& q, const MatrixXd& u);

// Row-wise argmax of U R; ties pick the smallest column index.
std::vector<int> discretize_q(const MatrixXd& u, const MatrixXd& r);

// One-hot matrix for labels (D x K).
MatrixXd indicator_matrix(const std::vector<int>& labels, int k);

struct KmeansResult {
  std::vector<int> labels;
  MatrixXd centers;  // K x dim
  double wcss = 0.0;
};

// k-means++ seeding, Lloyd iterations, empty clusters re-seeded at the
// farthest point; best of `restarts` runs by within-cluster sum of squares.
KmeansResult lloyd_kmeans(const MatrixXd& rows, int k, std::uint64_t seed,
                          int restarts = 10, int max_iter = 100);

}  // namespace fgc
