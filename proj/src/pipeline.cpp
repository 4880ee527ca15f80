#include "fgc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgc/discretize.hpp"
#include "fgc/graph.hpp"
#include "fgc/io.hpp"
#include "fgc/rng.hpp"

namespace fgc {

namespace {

using Eigen::Index;

void check_fit_config(const FitConfig& cfg) {
  if (!(cfg.xi > 0.0) || !(cfg.beta > 0.0) || !(cfg.alpha > 0.0) ||
      !(cfg.mu > 0.0) || !(cfg.gamma > 0.0)) {
    throw std::invalid_argument(
        "fit config: xi, beta, alpha, mu, gamma must be positive");
  }
  if (cfg.outer_max_iter < 1) {
    throw std::invalid_argument("fit config: outer_max_iter must be >= 1");
  }
  if (!(cfg.outer_rel_tol >= 0.0)) {
    throw std::invalid_argument("fit config: outer_rel_tol must be >= 0");
  }
}

void check_fit_inputs(const Eigen::MatrixXd& x_obs, const FairnessSystem& fs,
                      int k) {
  if (x_obs.rows() != fs.num_nodes) {
    throw std::invalid_argument("fit: signal rows do not match node count");
  }
  if (x_obs.cols() < 1) {
    throw std::invalid_argument("fit: need at least one signal column");
  }
  if (!x_obs.allFinite()) {
    throw std::invalid_argument("fit: signals must be finite");
  }
  if (k < 1 || static_cast<Index>(k) > fs.z.cols()) {
    throw std::invalid_argument(
        "fit: cluster count must be in [1, D-S+1] to fit the fair subspace");
  }
}

double fidelity_term(const Eigen::MatrixXd& x_obs, const FitResult& st) {
  const double n = static_cast<double>(x_obs.cols());
  return (x_obs - st.x).rowwise().squaredNorm().dot(st.upsilon) / n;
}

// Objective of the graph stage alone (no embedding or rotation terms).
double graph_stage_objective(const Eigen::MatrixXd& x_obs, const FitResult& st,
                             const FitConfig& cfg) {
  const Eigen::MatrixXd lap = laplacian_from_weights(st.w);
  return fidelity_term(x_obs, st) + cfg.xi * smoothness(st.x, lap) +
         st.upsilon.cwiseInverse().sum() +
         regularizer(st.w, cfg.alpha, cfg.beta);
}

bool relative_change_below(double prev, double cur, double tol) {
  return std::abs(prev - cur) / std::max(1.0, std::abs(prev)) < tol;
}

// Alternate the weight solve with the denoising filter until the graph-stage
// objective stalls. Shared by the separate pipeline's first stage and the
// unified solver's warm initialization. With record set, the per-sweep
// objective lands in st.objective_history and st.sweeps/st.converged reflect
// this loop; otherwise st only carries the final w, x, upsilon.
void run_graph_stage(const Eigen::MatrixXd& x_obs, const FitConfig& cfg,
                     const WSolverConfig& wcfg, FitResult& st, bool record) {
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= cfg.outer_max_iter; ++sweep) {
    try {
      const Eigen::VectorXd p = pairwise_cost(st.x, nullptr, cfg.xi, 0.0);
      st.w = solve_w(p, wcfg).w;
      if (cfg.denoise_signals) {
        const Eigen::MatrixXd lap = laplacian_from_weights(st.w);
        st.x = denoise(x_obs, lap, st.upsilon, cfg.xi, cfg.denoise, &st.x);
        st.upsilon = update_upsilon(x_obs, st.x);
      }
      const double obj = graph_stage_objective(x_obs, st, cfg);
      if (record) {
        st.objective_history.push_back(obj);
        st.sweeps = sweep;
      }
      if (sweep >= 2 && relative_change_below(prev_obj, obj, cfg.outer_rel_tol)) {
        if (record) st.converged = true;
        break;
      }
      prev_obj = obj;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("graph stage, sweep " + std::to_string(sweep) +
                               ": " + e.what());
    }
  }
}

std::string flag_string(bool v) { return v ? "1" : "0"; }

}  // namespace

double objective_value(const Eigen::MatrixXd& x_obs, const FitResult& state,
                       const FitConfig& cfg) {
  const Index d = x_obs.rows();
  if (state.x.rows() != d || state.x.cols() != x_obs.cols()) {
    throw std::invalid_argument("objective: denoised signal shape mismatch");
  }
  if (state.upsilon.size() != d || !(state.upsilon.array() > 0.0).all()) {
    throw std::invalid_argument("objective: node weights must be positive");
  }
  if (state.w.size() != edge_count(d)) {
    throw std::invalid_argument("objective: weight vector has wrong length");
  }
  const Index k = state.u.cols();
  if (state.u.rows() != d || state.q.rows() != d || state.q.cols() != k ||
      state.r.rows() != k || state.r.cols() != k) {
    throw std::invalid_argument("objective: embedding block shape mismatch");
  }
  const Eigen::MatrixXd lap = laplacian_from_weights(state.w);
  const double fid = fidelity_term(x_obs, state);
  const double smooth = cfg.xi * smoothness(state.x, lap);
  const double reg = regularizer(state.w, cfg.alpha, cfg.beta);
  const double inv_ups = state.upsilon.cwiseInverse().sum();
  const double embed =
      cfg.mu * (lap * state.u).cwiseProduct(state.u).sum();
  const double rot = cfg.gamma * (state.q - state.u * state.r).squaredNorm();
  return fid + smooth + reg + inv_ups + embed + rot;
}

void init_embedding_state(const FairnessSystem& fs, int k, std::uint64_t seed,
                          bool random_rotation, FitResult& st) {
  Rng root(seed);
  st.y = random_orthonormal(fs.z.cols(), k, root.spawn(1).next_u64());
  st.u = fs.z * st.y;
  st.r = random_rotation
             ? random_orthonormal(k, k, root.spawn(3).next_u64())
             : Eigen::MatrixXd::Identity(k, k);
  // The initial labels are whatever the initial embedding and rotation imply,
  // keeping (U, R, Q) mutually consistent from the start.
  st.labels = discretize_q(st.u, st.r);
  st.q = indicator_matrix(st.labels, k);
}

void seed_embedding_from_graph(const Eigen::MatrixXd& lap,
                               const FairnessSystem& fs, bool use_eigen,
                               std::uint64_t kmeans_seed, int kmeans_restarts,
                               FitResult& st) {
  const int k = static_cast<int>(st.q.cols());
  if (use_eigen) {
    st.y = fair_embed_eigen(lap, fs, k);
    st.u = fs.z * st.y;
  }
  st.labels = lloyd_kmeans(st.u, k, kmeans_seed, kmeans_restarts).labels;
  st.q = indicator_matrix(st.labels, k);
  st.r = procrustes_rotation(st.q, st.u);
}

void update_embedding_blocks(const Eigen::MatrixXd& lap,
                             const FairnessSystem& fs, double mu, double gamma,
                             const StiefelConfig& scfg, FitResult& st) {
  const int k = static_cast<int>(st.q.cols());
  const StiefelResult sr =
      stiefel_minimize(lap, fs, st.q, st.r, mu, gamma, st.y, scfg);
  st.y = sr.y;
  st.u = fs.z * st.y;
  st.r = procrustes_rotation(st.q, st.u);
  st.labels = discretize_q(st.u, st.r);
  st.q = indicator_matrix(st.labels, k);
}

FitResult unified_fit(const Eigen::MatrixXd& x_obs, const FairnessSystem& fs,
                      int k, const FitConfig& cfg) {
  check_fit_config(cfg);
  check_fit_inputs(x_obs, fs, k);
  const Index d = x_obs.rows();

  Rng root(cfg.seed);
  FitResult st;
  st.x = x_obs;
  st.upsilon = Eigen::VectorXd::Ones(d);
  init_embedding_state(fs, k, root.spawn(1).next_u64(),
                       cfg.random_rotation_init, st);

  WSolverConfig wcfg = cfg.w_solver;
  wcfg.alpha = cfg.alpha;
  wcfg.beta = cfg.beta;

  if (cfg.eigen_warm_start) {
    // Warm initialization: run the graph stage alone until it stalls, then
    // seat the embedding blocks on that graph's fair eigenvectors. Only the
    // converged graph carries usable spectral structure; the early iterates
    // place similar edges but have not yet reweighted them into blocks, so
    // an embedding seeded from them is no better than random. And because
    // the rotation-alignment term grows with node count while the spectral
    // term starts near zero, whatever labels the first sweep adopts become
    // self-reinforcing. The joint sweeps below refine all blocks from a
    // state where the rotation target is already meaningful.
    run_graph_stage(x_obs, cfg, wcfg, st, /*record=*/false);
    const Eigen::MatrixXd lap0 = laplacian_from_weights(st.w);
    seed_embedding_from_graph(lap0, fs, true, root.spawn(4).next_u64(),
                              cfg.kmeans_restarts, st);
  }

  double prev_obj = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= cfg.outer_max_iter; ++sweep) {
    try {
      const Eigen::VectorXd p = pairwise_cost(st.x, &st.u, cfg.xi, cfg.mu);
      st.w = solve_w(p, wcfg).w;
      const Eigen::MatrixXd lap = laplacian_from_weights(st.w);

      if (cfg.refresh_eigen_warm) {
        // The previous iterate always competes as the warm start; the
        // eigenvector solution of the fresh graph joins when configured.
        const Eigen::MatrixXd ye = fair_embed_eigen(lap, fs, k);
        const double f_eig = stiefel_objective(lap, fs, st.q, st.r, cfg.mu,
                                               cfg.gamma, ye);
        const double f_prev = stiefel_objective(lap, fs, st.q, st.r, cfg.mu,
                                                cfg.gamma, st.y);
        if (f_eig < f_prev) {
          st.y = ye;
          st.u = fs.z * st.y;
        }
      }
      update_embedding_blocks(lap, fs, cfg.mu, cfg.gamma, cfg.stiefel, st);

      if (cfg.denoise_signals) {
        st.x = denoise(x_obs, lap, st.upsilon, cfg.xi, cfg.denoise, &st.x);
        st.upsilon = update_upsilon(x_obs, st.x);
      }

      const double obj = objective_value(x_obs, st, cfg);
      st.objective_history.push_back(obj);
      st.sweeps = sweep;
      if (sweep >= 2 &&
          relative_change_below(prev_obj, obj, cfg.outer_rel_tol)) {
        st.converged = true;
        break;
      }
      prev_obj = obj;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("unified fit, sweep " + std::to_string(sweep) +
                               ": " + e.what());
    }
  }
  return st;
}

Eigen::VectorXd construct_baseline_graph(const Eigen::MatrixXd& x,
                                         GraphMethod method,
                                         const FitConfig& cfg) {
  const Index d = x.rows();
  if (d < 2) {
    throw std::invalid_argument("baseline graph: need at least two nodes");
  }
  const Index n = x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(edge_count(d));

  switch (method) {
    case GraphMethod::kLearned:
      throw std::invalid_argument(
          "baseline graph: learned graphs come from the solver, not a rule");

    case GraphMethod::kPearson: {
      const Eigen::VectorXd mean = x.rowwise().mean();
      const Eigen::MatrixXd centered = x.colwise() - mean;
      const Eigen::VectorXd var = centered.rowwise().squaredNorm();
      std::vector<bool> flat(static_cast<std::size_t>(d));
      for (Index i = 0; i < d; ++i) {
        const double tol = 1e-12 * (1.0 + std::abs(mean[i]));
        flat[static_cast<std::size_t>(i)] =
            var[i] <= static_cast<double>(n) * tol * tol;
      }
      for (Index i = 0; i < d; ++i) {
        if (flat[static_cast<std::size_t>(i)]) continue;
        for (Index j = i + 1; j < d; ++j) {
          if (flat[static_cast<std::size_t>(j)]) continue;
          const double corr = centered.row(i).dot(centered.row(j)) /
                              std::sqrt(var[i] * var[j]);
          w[edge_slot(i, j, d)] = std::max(corr, 0.0);
        }
      }
      return w;
    }

    case GraphMethod::kKnn: {
      if (cfg.knn_k < 1 || static_cast<Index>(cfg.knn_k) > d - 1) {
        throw std::invalid_argument("baseline graph: knn_k must be in [1, D-1]");
      }
      Eigen::MatrixXd dist2(d, d);
      dist2.setZero();
      for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
          const double v = (x.row(i) - x.row(j)).squaredNorm();
          dist2(i, j) = v;
          dist2(j, i) = v;
        }
      }
      for (Index i = 0; i < d; ++i) {
        std::vector<std::pair<double, Index>> order;
        order.reserve(static_cast<std::size_t>(d - 1));
        for (Index j = 0; j < d; ++j) {
          if (j != i) order.emplace_back(dist2(i, j), j);
        }
        std::sort(order.begin(), order.end());
        for (int m = 0; m < cfg.knn_k; ++m) {
          const Index j = order[static_cast<std::size_t>(m)].second;
          w[edge_slot(std::min(i, j), std::max(i, j), d)] = 1.0;
        }
      }
      return w;
    }

    case GraphMethod::kEpsnn: {
      if (!(cfg.eps_radius > 0.0)) {
        throw std::invalid_argument(
            "baseline graph: eps_radius must be positive");
      }
      const double r2 = cfg.eps_radius * cfg.eps_radius;
      for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
          if ((x.row(i) - x.row(j)).squaredNorm() <= r2) {
            w[edge_slot(i, j, d)] = 1.0;
          }
        }
      }
      return w;
    }
  }
  throw std::invalid_argument("baseline graph: unknown method");
}

FitResult separate_fit(const Eigen::MatrixXd& x_obs, const FairnessSystem& fs,
                       int k, const FitConfig& cfg, GraphMethod graph_method) {
  check_fit_config(cfg);
  check_fit_inputs(x_obs, fs, k);
  const Index d = x_obs.rows();

  Rng root(cfg.seed);
  FitResult st;
  st.x = x_obs;
  st.upsilon = Eigen::VectorXd::Ones(d);

  if (graph_method == GraphMethod::kLearned) {
    WSolverConfig wcfg = cfg.w_solver;
    wcfg.alpha = cfg.alpha;
    wcfg.beta = cfg.beta;
    run_graph_stage(x_obs, cfg, wcfg, st, /*record=*/true);
  } else {
    st.w = construct_baseline_graph(x_obs, graph_method, cfg);
    st.sweeps = 0;
    st.converged = true;
  }

  const Eigen::MatrixXd lap = laplacian_from_weights(st.w);
  st.y = fair_embed_eigen(lap, fs, k);
  st.u = fs.z * st.y;

  if (cfg.kmeans_labels) {
    const KmeansResult km = lloyd_kmeans(st.u, k, root.spawn(2).next_u64(),
                                         cfg.kmeans_restarts);
    st.labels = km.labels;
    st.r = Eigen::MatrixXd::Identity(k, k);
    st.q = indicator_matrix(st.labels, k);
  } else {
    const std::vector<int> seed_labels =
        discretize_q(st.u, Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd q0 = indicator_matrix(seed_labels, k);
    st.r = procrustes_rotation(q0, st.u);
    st.labels = discretize_q(st.u, st.r);
    st.q = indicator_matrix(st.labels, k);
  }
  return st;
}

void write_fit_result(const std::string& dir, const FitResult& result,
                      const FitConfig& cfg) {
  if (result.w.size() == 0) {
    throw std::invalid_argument("write fit result: empty weight vector");
  }
  const Index d = nodes_from_edge_count(result.w.size());
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "graph.txt");
    if (!out) throw std::runtime_error("write fit result: cannot open graph.txt");
    write_graph(out, result.w, d);
  }
  {
    std::ofstream out(fs::path(dir) / "labels.csv");
    if (!out) throw std::runtime_error("write fit result: cannot open labels.csv");
    out << "node,label\n";
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
      out << (i + 1) << "," << result.labels[i] << "\n";
    }
  }
  {
    std::ofstream out(fs::path(dir) / "objective.csv");
    if (!out)
      throw std::runtime_error("write fit result: cannot open objective.csv");
    out << "sweep,objective\n";
    for (std::size_t i = 0; i < result.objective_history.size(); ++i) {
      out << (i + 1) << "," << format_double(result.objective_history[i])
          << "\n";
    }
  }
  {
    std::ofstream out(fs::path(dir) / "config.txt");
    if (!out) throw std::runtime_error("write fit result: cannot open config.txt");
    out << "xi = " << format_double(cfg.xi) << "\n"
        << "beta = " << format_double(cfg.beta) << "\n"
        << "alpha = " << format_double(cfg.alpha) << "\n"
        << "mu = " << format_double(cfg.mu) << "\n"
        << "gamma = " << format_double(cfg.gamma) << "\n"
        << "outer_max_iter = " << cfg.outer_max_iter << "\n"
        << "outer_rel_tol = " << format_double(cfg.outer_rel_tol) << "\n"
        << "seed = " << cfg.seed << "\n"
        << "denoise_signals = " << flag_string(cfg.denoise_signals) << "\n"
        << "eigen_warm_start = " << flag_string(cfg.eigen_warm_start) << "\n"
        << "refresh_eigen_warm = " << flag_string(cfg.refresh_eigen_warm)
        << "\n"
        << "random_rotation_init = " << flag_string(cfg.random_rotation_init)
        << "\n"
        << "kmeans_labels = " << flag_string(cfg.kmeans_labels) << "\n"
        << "kmeans_restarts = " << cfg.kmeans_restarts << "\n"
        << "knn_k = " << cfg.knn_k << "\n"
        << "eps_radius = " << format_double(cfg.eps_radius) << "\n";
  }
}

}  // namespace fgc
