#include "fgc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgc/graph.hpp"
#include "fgc/rng.hpp"

namespace fgc {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pairwise squared distances of rows, zero diagonal.
MatrixXd row_sqdist(const MatrixXd& x) {
  const Index d = x.rows();
  MatrixXd out = MatrixXd::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

VectorXd pack_symmetrized(const MatrixXd& w_raw) {
  MatrixXd sym = 0.5 * (w_raw + w_raw.transpose());
  sym.diagonal().setZero();
  return pack_upper(sym);
}

MatrixXd solve_w_columns(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& xxt,
                         const MatrixXd& j_tilde, const MatrixXd& p_u,
                         double mu_u, double gamma_u, bool alternate_sign) {
  const double half_mu = alternate_sign ? 0.5 * mu_u : -0.5 * mu_u;
  const MatrixXd rhs = gamma_u * j_tilde + 2.0 * xxt + half_mu * p_u;
  return llt.solve(rhs);
}

}  // namespace

VectorXd fjgsed_w_row(const VectorXd& costs, int l) {
  const Index d = costs.size();
  if (l < 1) throw std::invalid_argument("neighbor weights: l must be >= 1");
  Index finite = 0;
  for (Index j = 0; j < d; ++j) {
    if (std::isfinite(costs[j])) ++finite;
  }
  if (finite < static_cast<Index>(l) + 1) {
    throw std::invalid_argument(
        "neighbor weights: need at least l+1 finite costs");
  }
  std::vector<std::pair<double, Index>> order;
  order.reserve(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) order.emplace_back(costs[j], j);
  std::sort(order.begin(), order.end());

  const double c_next = order[static_cast<std::size_t>(l)].first;
  double c_sum = 0.0;
  for (int m = 0; m < l; ++m) c_sum += order[static_cast<std::size_t>(m)].first;
  const double den = static_cast<double>(l) * c_next - c_sum;

  VectorXd w = VectorXd::Zero(d);
  if (den <= 1e-12 * std::max(1.0, static_cast<double>(l) * c_next)) {
    // All l+1 cheapest costs coincide: spread uniformly over the window.
    for (int m = 0; m < l; ++m) {
      w[order[static_cast<std::size_t>(m)].second] = 1.0 / static_cast<double>(l);
    }
    return w;
  }
  for (int m = 0; m < l; ++m) {
    const auto& [cost, j] = order[static_cast<std::size_t>(m)];
    w[j] = std::max((c_next - cost) / den, 0.0);
  }
  return w;
}

FitResult fjgsed_fit(const MatrixXd& x, const FairnessSystem& fs, int k,
                     const FjgsedConfig& cfg,
                     std::vector<double>* row_sum_errors) {
  const Index d = x.rows();
  if (d != fs.num_nodes) {
    throw std::invalid_argument("neighbor fit: signal rows do not match nodes");
  }
  if (cfg.l < 1 || static_cast<Index>(cfg.l) > d - 1) {
    throw std::invalid_argument("neighbor fit: l must be in [1, D-1]");
  }
  if (cfg.mu_j < 0.0 || cfg.gamma_j < 0.0) {
    throw std::invalid_argument("neighbor fit: mu_j, gamma_j must be >= 0");
  }
  if (cfg.max_iter < 1) {
    throw std::invalid_argument("neighbor fit: max_iter must be >= 1");
  }
  if (k < 1 || static_cast<Index>(k) > fs.z.cols()) {
    throw std::invalid_argument("neighbor fit: invalid cluster count");
  }
  if (row_sum_errors) row_sum_errors->clear();

  FitResult st;
  st.x = x;
  st.upsilon = VectorXd::Ones(d);
  init_embedding_state(fs, k, Rng(cfg.seed).spawn(1).next_u64(),
                       cfg.random_rotation_init, st);

  const MatrixXd base_d2 = row_sqdist(x);

  {
    // Seed the embedding from the graph the signal distances alone imply,
    // before the embedding term can feed noise back into the weights.
    MatrixXd costs0 = base_d2;
    costs0.diagonal().setConstant(kInf);
    MatrixXd w_rows0(d, d);
    for (Index i = 0; i < d; ++i) {
      w_rows0.row(i) = fjgsed_w_row(costs0.row(i), cfg.l);
    }
    const MatrixXd lap0 = laplacian_from_weights(pack_symmetrized(w_rows0));
    seed_embedding_from_graph(lap0, fs, true, Rng(cfg.seed).spawn(4).next_u64(),
                              50, st);
  }

  double prev_obj = kInf;
  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    try {
      MatrixXd costs = base_d2 + 0.5 * cfg.mu_j * row_sqdist(st.u);
      costs.diagonal().setConstant(kInf);
      MatrixXd w_rows(d, d);
      double worst_row = 0.0;
      for (Index i = 0; i < d; ++i) {
        const VectorXd row = fjgsed_w_row(costs.row(i), cfg.l);
        worst_row = std::max(worst_row, std::abs(row.sum() - 1.0));
        w_rows.row(i) = row;
      }
      if (row_sum_errors) row_sum_errors->push_back(worst_row);

      st.w = pack_symmetrized(w_rows);
      const MatrixXd lap = laplacian_from_weights(st.w);
      update_embedding_blocks(lap, fs, cfg.mu_j, cfg.gamma_j, cfg.stiefel, st);

      const double obj =
          base_d2.cwiseProduct(w_rows).sum() +
          cfg.mu_j * (lap * st.u).cwiseProduct(st.u).sum() +
          cfg.gamma_j * (st.q - st.u * st.r).squaredNorm();
      st.objective_history.push_back(obj);
      st.sweeps = sweep;
      if (sweep >= 2 && std::abs(prev_obj - obj) /
                                std::max(1.0, std::abs(prev_obj)) <
                            cfg.rel_tol) {
        st.converged = true;
        break;
      }
      prev_obj = obj;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("neighbor fit, sweep " + std::to_string(sweep) +
                               ": " + e.what());
    }
  }
  return st;
}

MatrixXd fsrsc_soft_threshold(const MatrixXd& j, double threshold) {
  if (threshold < 0.0) {
    throw std::invalid_argument("soft threshold: threshold must be >= 0");
  }
  return (j.array().abs() - threshold)
      .max(0.0)
      .matrix()
      .cwiseProduct(j.unaryExpr([](double v) {
        return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      }));
}

MatrixXd fsrsc_w_update(const MatrixXd& xxt, const MatrixXd& j_tilde,
                        const MatrixXd& p_u, double mu_u, double gamma_u,
                        bool alternate_sign) {
  if (!(gamma_u > 0.0)) {
    throw std::invalid_argument("representation step: gamma_u must be > 0");
  }
  const Index d = xxt.rows();
  const MatrixXd sys =
      gamma_u * MatrixXd::Identity(d, d) + 2.0 * xxt;
  const Eigen::LLT<MatrixXd> llt(sys);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("representation step: column system not SPD");
  }
  return solve_w_columns(llt, xxt, j_tilde, p_u, mu_u, gamma_u,
                         alternate_sign);
}

FitResult fsrsc_fit(const MatrixXd& x, const FairnessSystem& fs, int k,
                    const FsrscConfig& cfg,
                    std::vector<double>* primal_residuals) {
  const Index d = x.rows();
  if (d != fs.num_nodes) {
    throw std::invalid_argument(
        "representation fit: signal rows do not match nodes");
  }
  if (cfg.alpha_u < 0.0 || cfg.mu_u < 0.0) {
    throw std::invalid_argument(
        "representation fit: alpha_u, mu_u must be >= 0");
  }
  if (!(cfg.gamma_u > 0.0)) {
    throw std::invalid_argument("representation fit: gamma_u must be > 0");
  }
  if (cfg.max_iter < 1) {
    throw std::invalid_argument("representation fit: max_iter must be >= 1");
  }
  if (k < 1 || static_cast<Index>(k) > fs.z.cols()) {
    throw std::invalid_argument("representation fit: invalid cluster count");
  }
  if (primal_residuals) primal_residuals->clear();

  FitResult st;
  st.x = x;
  st.upsilon = VectorXd::Ones(d);
  init_embedding_state(fs, k, Rng(cfg.seed).spawn(1).next_u64(),
                       cfg.random_rotation_init, st);

  MatrixXd xr = x;
  if (cfg.normalize_signals) {
    for (Index i = 0; i < d; ++i) {
      const double nrm = xr.row(i).norm();
      if (nrm > 0.0) xr.row(i) /= nrm;
    }
  }
  const MatrixXd xxt = xr * xr.transpose();
  const MatrixXd sys =
      cfg.gamma_u * MatrixXd::Identity(d, d) + 2.0 * xxt;
  const Eigen::LLT<MatrixXd> llt(sys);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("representation fit: column system not SPD");
  }

  {
    // Seed the embedding from the self-representation graph of the signals
    // alone: one column solve with no consensus, multiplier, or embedding
    // feedback, projected the same way as the in-loop update.
    MatrixXd w0 = solve_w_columns(llt, xxt, MatrixXd::Zero(d, d),
                                  MatrixXd::Zero(d, d), cfg.mu_u, cfg.gamma_u,
                                  cfg.alternate_w_sign);
    w0 = w0.cwiseMax(0.0);
    w0.diagonal().setZero();
    w0 = 0.5 * (w0 + w0.transpose()).eval();
    const MatrixXd lap0 = laplacian_from_weights(pack_upper(w0));
    seed_embedding_from_graph(lap0, fs, true, Rng(cfg.seed).spawn(4).next_u64(),
                              50, st);
  }

  MatrixXd w_mat = MatrixXd::Zero(d, d);
  MatrixXd a_mat = MatrixXd::Zero(d, d);
  MatrixXd mult = MatrixXd::Zero(d, d);
  double prev_obj = kInf;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    try {
      a_mat = fsrsc_soft_threshold(w_mat - mult / cfg.gamma_u,
                                   cfg.alpha_u / cfg.gamma_u);
      const MatrixXd j_tilde = a_mat + mult / cfg.gamma_u;
      const MatrixXd p_u = row_sqdist(st.u);
      w_mat = solve_w_columns(llt, xxt, j_tilde, p_u, cfg.mu_u, cfg.gamma_u,
                              cfg.alternate_w_sign);
      w_mat = w_mat.cwiseMax(0.0);
      w_mat.diagonal().setZero();
      w_mat = 0.5 * (w_mat + w_mat.transpose()).eval();
      mult += cfg.gamma_u * (a_mat - w_mat);
      if (primal_residuals) {
        primal_residuals->push_back((a_mat - w_mat).norm());
      }

      st.w = pack_upper(w_mat);
      const MatrixXd lap = laplacian_from_weights(st.w);
      update_embedding_blocks(lap, fs, cfg.mu_u, cfg.gamma_u, cfg.stiefel, st);

      const double obj =
          (xr - w_mat.transpose() * xr).squaredNorm() +
          cfg.alpha_u * w_mat.cwiseAbs().sum() +
          cfg.mu_u * (lap * st.u).cwiseProduct(st.u).sum() +
          cfg.gamma_u * (st.q - st.u * st.r).squaredNorm();
      st.objective_history.push_back(obj);
      st.sweeps = iter;
      if (iter >= 2 && std::abs(prev_obj - obj) /
                               std::max(1.0, std::abs(prev_obj)) <
                           cfg.rel_tol) {
        st.converged = true;
        break;
      }
      prev_obj = obj;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("representation fit, iteration " +
                               std::to_string(iter) + ": " + e.what());
    }
  }
  return st;
}

}  // namespace fgc
