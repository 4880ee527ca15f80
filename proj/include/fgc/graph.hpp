#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <utility>

// Weighted undirected graphs on D nodes, stored as the packed upper
// triangle w of the weight matrix (row-major slots: (0,1),(0,2),...,(1,2),...).
// The linear degree operator S maps w to the degree vector, S w = W 1.

namespace fgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Degrees at or below this are outside the log-barrier domain.
inline constexpr double kDegreeFloor = 1e-12;

Eigen::Index edge_count(Eigen::Index num_nodes);  // D(D-1)/2
Eigen::Index nodes_from_edge_count(Eigen::Index p);
Eigen::Index edge_slot(Eigen::Index i, Eigen::Index j, Eigen::Index d);
std::pair<Eigen::Index, Eigen::Index> slot_edge(Eigen::Index slot,
                                                Eigen::Index d);

VectorXd pack_upper(const MatrixXd& w_mat);
MatrixXd unpack_upper(const VectorXd& w);

// S w and S^T d.  sigma_max(S) = sqrt(2(D-1)).
VectorXd degree_apply(const VectorXd& w);
VectorXd degree_adjoint(const VectorXd& d);

MatrixXd laplacian_from_weights(const VectorXd& w);

// Tr(X^T L X) / N for node signals X (D x N).
double smoothness(const MatrixXd& x, const MatrixXd& lap);

// Reg_w(w) = -alpha * 1^T log(S w) + 2 * beta * ||w||^2.
// Throws std::domain_error when any degree <= kDegreeFloor.
double regularizer(const VectorXd& w, double alpha, double beta);
// Gradient -alpha * S^T (1 / S w) + 4 * beta * w, same domain check.
VectorXd regularizer_gradient(const VectorXd& w, double alpha, double beta);
// Dense Hessian 4 beta I + alpha S^T diag((S w)^-2) S; 4 beta-strongly convex.
MatrixXd regularizer_hessian(const VectorXd& w, double alpha, double beta);

// Edge-list serialization.
//   header:  fgc-graph v1 D=<n>
//   lines:   <i> <j> <weight>   (1-based, i < j, nonzero weights only)
void write_graph(std::ostream& out, const VectorXd& w, Eigen::Index d);
// Returns (w, D).  Rejects malformed headers, out-of-range or duplicate
// edges, i >= j, and non-finite weights.
std::pair<VectorXd, Eigen::Index> read_graph(std::istream& in);

}  // namespace fgc
