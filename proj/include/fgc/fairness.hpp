#pragma once

#include <Eigen/Dense>
#include <vector>

// Sensitive-group machinery.  Group labels induce the constraint matrix F
// (mean-centered indicators of the first S-1 groups) and an orthonormal
// basis Z of null(F^T).  An embedding of the form U = Z Y automatically
// represents every group in every cluster at its global proportion.

namespace fgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FairnessSystem {
  Eigen::Index num_nodes = 0;
  int num_groups = 0;
  std::vector<int> group_labels;      // 0-based, size D
  std::vector<Eigen::Index> group_sizes;
  MatrixXd f;                         // D x (S-1)
  MatrixXd z;                         // D x (D-S+1), Z^T Z = I
};

// Labels must be 0..S-1 with every group nonempty.
FairnessSystem build_fairness_system(const std::vector<int>& group_labels);

// Scaled cluster indicator: column k is 1/sqrt(|C_k|) on members of
// cluster k, zero elsewhere; an empty cluster yields a zero column.
MatrixXd scaled_indicator(const std::vector<int>& cluster_labels, int k);

// True iff max |F^T U~| <= 1e-9, i.e. the partition represents every group
// proportionally in every nonempty cluster.
bool check_lemma1(const std::vector<int>& cluster_labels, int k,
                  const FairnessSystem& fs);

inline constexpr double kLemma1Tol = 1e-9;

}  // namespace fgc
