#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fgc/embedding.hpp"
#include "fgc/fairness.hpp"
#include "fgc/filter.hpp"
#include "fgc/learner.hpp"

// End-to-end fitting: alternating minimization of the joint objective
//   (1/N)||diag(sqrt(v)) (Xo - X)||_F^2 + (xi/N) Tr(X^T L X) + Reg(L)
//   + sum_i 1/v_i + mu Tr(U^T L U) + gamma ||Q - U R||_F^2
// over the weight vector w (L), the fair embedding U = Z Y, the rotation R,
// the indicator Q, the denoised signals X, and the node weights v.  Also the
// staged variant (graph, then embedding, then rounding) and the rule-based
// graph constructors it compares against.

namespace fgc {

enum class GraphMethod { kLearned, kPearson, kKnn, kEpsnn };

struct FitConfig {
  double xi = 0.05;
  double beta = 0.01;
  double alpha = 1.0;
  double mu = 0.01;
  double gamma = 0.01;

  int outer_max_iter = 50;
  double outer_rel_tol = 1e-6;

  WSolverConfig w_solver{};
  StiefelConfig stiefel{};
  DenoiseOptions denoise{};

  std::uint64_t seed = 1;

  // X and v stay fixed at Xo and 1 when false (ablation path).
  bool denoise_signals = true;
  // With eigen_warm_start the solver first runs the graph stage alone to
  // convergence and seats Y on that graph's fair eigenvectors (labels by
  // k-means, rotation by Procrustes) before the joint sweeps; without it
  // the joint loop starts from the seeded random state.  refresh_eigen_warm
  // additionally lets the current graph's eigenvector solution compete with
  // the previous Y iterate on every sweep (kept only when it lowers the
  // embedding objective).
  bool eigen_warm_start = true;
  bool refresh_eigen_warm = false;
  // R starts at identity unless a seeded random rotation is requested.
  bool random_rotation_init = false;
  // Staged variant only: round with k-means on U instead of rotation.
  bool kmeans_labels = false;
  int kmeans_restarts = 50;

  // Rule-based graph parameters.
  int knn_k = 10;
  double eps_radius = 1.0;
};

struct FitResult {
  Eigen::VectorXd w;        // learned edge weights, packed upper triangle
  Eigen::MatrixXd x;        // denoised signals
  Eigen::VectorXd upsilon;  // node fidelity weights
  Eigen::MatrixXd y;        // Stiefel coordinates, (D-S+1) x K
  Eigen::MatrixXd u;        // fair embedding Z Y, D x K
  Eigen::MatrixXd r;        // rotation, K x K
  Eigen::MatrixXd q;        // one-hot indicator, D x K
  std::vector<int> labels;  // argmax rows of Q
  std::vector<double> objective_history;  // value after each full sweep
  int sweeps = 0;
  bool converged = false;
};

// Joint objective at an arbitrary state; the log barrier in Reg(L) throws
// on nonpositive degrees like regularizer() does.
double objective_value(const Eigen::MatrixXd& x_obs, const FitResult& state,
                       const FitConfig& cfg);

FitResult unified_fit(const Eigen::MatrixXd& x_obs, const FairnessSystem& fs,
                      int k, const FitConfig& cfg);

// Packed weights from a rule: Pearson correlation clipped at zero, k-NN
// (binary, union-symmetrized), or epsilon-neighborhood on row distances.
Eigen::VectorXd construct_baseline_graph(const Eigen::MatrixXd& x,
                                         GraphMethod method,
                                         const FitConfig& cfg);

// Stage 1 graph (learned via denoise/weight alternation, or a rule),
// stage 2 eigenvector embedding, stage 3 one rounding pass.  No feedback
// between stages.
FitResult separate_fit(const Eigen::MatrixXd& x_obs, const FairnessSystem& fs,
                       int k, const FitConfig& cfg, GraphMethod graph_method);

// Serializes a result directory: graph.txt (edge list), labels.csv,
// objective.csv, config.txt snapshot.
void write_fit_result(const std::string& dir, const FitResult& result,
                      const FitConfig& cfg);

// Shared building blocks for every end-to-end method (the graph term is
// what varies between them; the embedding blocks do not).

// Seeded starting point: random orthonormal Y (and U = Z Y), uniform
// one-hot Q, identity rotation R unless a seeded random one is requested.
void init_embedding_state(const FairnessSystem& fs, int k, std::uint64_t seed,
                          bool random_rotation, FitResult& st);

// One pass over the embedding blocks: Stiefel descent on Y warm-started
// from st.y, Procrustes update of R against the current Q, argmax rounding
// of Q under the new rotation.
// Re-derives the embedding state from the first learned graph, once, before
// the first joint embedding round.  The randomly initialized Q carries no
// information, yet the alignment weight scales with the node count while the
// smoothness weight scales with the near-zero bottom eigenvalues, so the
// first Stiefel descent otherwise drags U toward the arbitrary Q and the
// rotation/indicator alternation then locks into that basin for good.  With
// use_eigen the fair eigenvector embedding of the graph replaces Y; Q is
// reseeded by k-means on the embedding rows, which is invariant to the basis
// rotation the alignment term cannot see, and R is refit to the new pair.
void seed_embedding_from_graph(const Eigen::MatrixXd& lap,
                               const FairnessSystem& fs, bool use_eigen,
                               std::uint64_t kmeans_seed, int kmeans_restarts,
                               FitResult& st);

// One embedding round: Stiefel descent on Y (U = Z Y), then the rotation and
// indicator blocks in that order.
void update_embedding_blocks(const Eigen::MatrixXd& lap,
                             const FairnessSystem& fs, double mu, double gamma,
                             const StiefelConfig& scfg, FitResult& st);

}  // namespace fgc
