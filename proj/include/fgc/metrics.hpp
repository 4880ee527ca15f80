#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "fgc/fairness.hpp"

// Evaluation metrics (edge F1, estimation error, clustering error, balance,
// ratio cut) and mechanical checkers for the two theoretical bounds.

namespace fgc {

struct MetricReport {
  double fs = 0.0;
  double ee = 0.0;
  double ce = 0.0;
  double balance = 0.0;
  double ratiocut = 0.0;
  int misclassified = 0;
  VectorXd per_cluster_balance;
};

// CSV row with the fixed header below; per-cluster balance stays in the
// struct (variable length).
std::string metric_report_header();
std::string metric_report_row(const MetricReport& report);

inline constexpr double kEdgeEps = 1e-8;

// Edge-set F1 between packed weight vectors; edge = weight > edge_eps.
// Two empty graphs score 1 by convention.
double f1_score(const VectorXd& w_true, const VectorXd& w_est,
                double edge_eps = kEdgeEps);

// || Z^T (L_hat - L_star) Z ||_F after rescaling L_hat to trace D.
// Throws std::domain_error when Tr(L_hat) <= 0.
double estimation_error(const MatrixXd& lap_est, const MatrixXd& lap_true,
                        const FairnessSystem& fs);

struct CeResult {
  double ce = 0.0;
  int misclassified = 0;
  std::vector<int> perm;  // est label -> matched true label
};

// Exact optimum over label permutations (assignment on the confusion matrix).
CeResult clustering_error(const std::vector<int>& est_labels,
                          const std::vector<int>& true_labels, int k);

// Per-cluster min pairwise group ratio; degenerate clusters score 0.
std::pair<double, VectorXd> balance(const std::vector<int>& labels,
                                    const std::vector<int>& group_labels,
                                    int k, int s);

// Sum over clusters of cut(C_k, rest) / |C_k|; empty cluster is an error.
double ratiocut(const std::vector<int>& labels, const VectorXd& w, int k);

struct BoundReport {
  double c_d = 0.0;
  double c_x = 0.0;
  double c_r = 0.0;
  double bound_value = 0.0;
  double lhs = 0.0;
  bool holds = false;
};

// Estimation-error bound: valid when lap_est minimizes the weight
// subproblem at (x, Z y_hat) and lap_true is feasible.
BoundReport prop2_bound(const MatrixXd& lap_est, const MatrixXd& lap_true,
                        const MatrixXd& x, const MatrixXd& y_hat,
                        const FairnessSystem& fs, double mu, double beta);

// Graph-estimation term of the misclassification bound; constant is 512
// (main statement) or 256 (appendix chain).
double prop1_second_term(int k, Eigen::Index d, double c, double d_prob,
                         double epsilon, double ee, int constant = 512);

// Min-cost assignment on a square matrix; returns column for each row.
std::vector<int> hungarian_min(const MatrixXd& cost);

// Rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fgc
