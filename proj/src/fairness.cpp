#include "fgc/fairness.hpp"

#include <cmath>
#include <stdexcept>

namespace fgc {

using Eigen::Index;

FairnessSystem build_fairness_system(const std::vector<int>& group_labels) {
  const Index d = static_cast<Index>(group_labels.size());
  if (d < 1) throw std::invalid_argument("build_fairness_system: no nodes");
  int s = 0;
  for (int g : group_labels) {
    if (g < 0) throw std::invalid_argument("build_fairness_system: negative group label");
    s = std::max(s, g + 1);
  }
  FairnessSystem fs;
  fs.num_nodes = d;
  fs.num_groups = s;
  fs.group_labels = group_labels;
  fs.group_sizes.assign(static_cast<std::size_t>(s), 0);
  for (int g : group_labels) ++fs.group_sizes[static_cast<std::size_t>(g)];
  for (Index sz : fs.group_sizes)
    if (sz == 0) throw std::invalid_argument("build_fairness_system: empty group");
  if (d < s) throw std::invalid_argument("build_fairness_system: more groups than nodes");

  // F column s: indicator of group s minus its global fraction.
  fs.f = MatrixXd::Zero(d, s - 1);
  for (Index i = 0; i < d; ++i) {
    for (int g = 0; g + 1 < s; ++g) {
      const double ind = group_labels[static_cast<std::size_t>(i)] == g ? 1.0 : 0.0;
      fs.f(i, g) = ind - static_cast<double>(fs.group_sizes[static_cast<std::size_t>(g)]) /
                             static_cast<double>(d);
    }
  }

  if (s == 1) {
    fs.z = MatrixXd::Identity(d, d);
    return fs;
  }

  // Null(F^T) from a column-pivoted QR of F: trailing columns of Q span the
  // orthogonal complement of range(F).  Rank decided against 1e-10 * ||F||.
  Eigen::ColPivHouseholderQR<MatrixXd> qr(fs.f);
  const double thresh = 1e-10 * fs.f.norm();
  const MatrixXd r = qr.matrixR();
  Index rank = 0;
  const Index rmax = std::min(fs.f.rows(), fs.f.cols());
  for (Index i = 0; i < rmax; ++i)
    if (std::fabs(r(i, i)) > thresh) ++rank;
  if (rank != s - 1)
    throw std::runtime_error("build_fairness_system: constraint matrix rank-deficient");
  MatrixXd q = qr.householderQ();
  fs.z = q.rightCols(d - rank);
  return fs;
}

MatrixXd scaled_indicator(const std::vector<int>& cluster_labels, int k) {
  const Index d = static_cast<Index>(cluster_labels.size());
  if (k < 1) throw std::invalid_argument("scaled_indicator: need k >= 1");
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (int c : cluster_labels) {
    if (c < 0 || c >= k) throw std::invalid_argument("scaled_indicator: label out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  MatrixXd u = MatrixXd::Zero(d, k);
  for (Index i = 0; i < d; ++i) {
    const int c = cluster_labels[static_cast<std::size_t>(i)];
    u(i, c) = 1.0 / std::sqrt(static_cast<double>(counts[static_cast<std::size_t>(c)]));
  }
  return u;
}

bool check_lemma1(const std::vector<int>& cluster_labels, int k,
                  const FairnessSystem& fs) {
  if (static_cast<Eigen::Index>(cluster_labels.size()) != fs.num_nodes)
    throw std::invalid_argument("check_lemma1: label count mismatch");
  if (fs.num_groups == 1) return true;
  const MatrixXd u = scaled_indicator(cluster_labels, k);
  return (fs.f.transpose() * u).cwiseAbs().maxCoeff() <= kLemma1Tol;
}

}  // namespace fgc
