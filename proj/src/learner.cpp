#include "fgc/learner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fgc/graph.hpp"
#include "fgc/kernels.hpp"
#include "fgc/rng.hpp"

namespace fgc {

using Eigen::Index;

VectorXd pairwise_cost(const MatrixXd& x, const MatrixXd* u, double xi,
                       double mu) {
  const Index d = x.rows();
  const Index n = x.cols();
  if (d < 2) throw std::invalid_argument("pairwise_cost: need >= 2 nodes");
  if (n < 1) throw std::invalid_argument("pairwise_cost: no signals");
  if (xi < 0.0 || mu < 0.0) throw std::invalid_argument("pairwise_cost: negative weight");
  if (mu > 0.0 && !u) throw std::invalid_argument("pairwise_cost: mu > 0 needs U");
  if (u && u->rows() != d) throw std::invalid_argument("pairwise_cost: U row mismatch");

  // Row-major copies make node rows contiguous for the distance kernel.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor xr = x;
  RowMajor ur;
  if (u && mu > 0.0) ur = *u;

  const auto& ops = kernels::active();
  const double xscale = xi / static_cast<double>(n);
  VectorXd p(edge_count(d));
  Index s = 0;
  for (Index i = 0; i < d; ++i) {
    const double* xi_row = xr.data() + i * n;
    const double* ui_row = ur.size() ? ur.data() + i * ur.cols() : nullptr;
    for (Index j = i + 1; j < d; ++j, ++s) {
      double cost = 0.0;
      if (xscale > 0.0)
        cost += xscale * ops.sqdist(xi_row, xr.data() + j * n,
                                    static_cast<std::size_t>(n));
      if (ui_row)
        cost += mu * ops.sqdist(ui_row, ur.data() + j * ur.cols(),
                                static_cast<std::size_t>(ur.cols()));
      p[s] = cost;
    }
  }
  return p;
}

double w_objective(const VectorXd& p, const VectorXd& w, double alpha,
                   double beta) {
  if (p.size() != w.size()) throw std::invalid_argument("w_objective: size mismatch");
  const VectorXd deg = degree_apply(w);
  if ((deg.array() <= kDegreeFloor).any())
    return std::numeric_limits<double>::infinity();
  return p.dot(w) - alpha * deg.array().log().sum() + 2.0 * beta * w.squaredNorm();
}

double w_kkt_residual(const VectorXd& p, const VectorXd& w, double alpha,
                      double beta) {
  const VectorXd deg = degree_apply(w);
  if ((deg.array() <= kDegreeFloor).any())
    return std::numeric_limits<double>::infinity();
  const VectorXd grad =
      p - alpha * degree_adjoint(deg.cwiseInverse()) + 4.0 * beta * w;
  double acc = 0.0;
  for (Index e = 0; e < w.size(); ++e) {
    const double g = w[e] > 0.0 ? grad[e] : std::min(grad[e], 0.0);
    acc += g * g;
  }
  return std::sqrt(acc);
}

WSolverResult solve_w(const VectorXd& p, const WSolverConfig& cfg) {
  const Index d = nodes_from_edge_count(p.size());
  if (cfg.alpha <= 0.0 || cfg.beta <= 0.0)
    throw std::invalid_argument("solve_w: alpha and beta must be positive");
  if ((p.array() < 0.0).any())
    throw std::invalid_argument("solve_w: negative pairwise cost");

  // Rescaling: minimizing with (p/alpha, beta/alpha) at alpha=1 gives the
  // same w.  The dual recursion is stated for costs entering doubled, so
  // half_q feeds the clamp and (S^T omega - q) appears inside it.
  const VectorXd q = p / cfg.alpha;
  const VectorXd half_q = 0.5 * q;
  const double beta_t = cfg.beta / cfg.alpha;
  const double lip = static_cast<double>(d - 1) / (2.0 * beta_t);
  const double inv4beta = 1.0 / (4.0 * beta_t);
  const std::size_t pn = static_cast<std::size_t>(p.size());

  VectorXd omega = VectorXd::Ones(d);
  if (cfg.random_dual_init) {
    Rng rng(cfg.dual_init_seed);
    for (Index i = 0; i < d; ++i) omega[i] = rng.uniform(0.5, 1.5);
  }
  VectorXd r_prev = omega, r(d), v(d);
  VectorXd w_bar(p.size()), w_cur(p.size()), w_last = VectorXd::Zero(p.size());
  double eta = 1.0;

  const auto& ops = kernels::active();
  const double kkt_target = cfg.rel_tol * (1.0 + p.norm());
  WSolverResult out;
  for (int t = 1; t <= cfg.max_iter; ++t) {
    VectorXd st_omega = degree_adjoint(omega);
    ops.clamp_step(w_bar.data(), st_omega.data(), half_q.data(), inv4beta, pn);
    VectorXd sw = degree_apply(w_bar);
    ops.dual_prox(v.data(), r.data(), sw.data(), omega.data(), lip,
                  static_cast<std::size_t>(d));
    const double eta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * eta * eta));
    omega = r + ((eta - 1.0) / eta_next) * (r - r_prev);
    eta = eta_next;
    r_prev = r;

    VectorXd st_r = degree_adjoint(r);
    ops.clamp_step(w_cur.data(), st_r.data(), half_q.data(), inv4beta, pn);
    const double change = (w_cur - w_last).norm() / std::max(1.0, w_cur.norm());
    w_last = w_cur;
    out.iterations = t;
    out.rel_change = change;
    if (change < cfg.rel_tol) {
      out.kkt_residual = w_kkt_residual(p, w_cur, cfg.alpha, cfg.beta);
      if (out.kkt_residual <= kkt_target) {
        out.w = w_cur;
        return out;
      }
    }
  }
  out.kkt_residual = w_kkt_residual(p, w_cur, cfg.alpha, cfg.beta);
  throw std::runtime_error("solve_w: no convergence after " +
                           std::to_string(cfg.max_iter) +
                           " iterations, KKT residual " +
                           std::to_string(out.kkt_residual));
}

}  // namespace fgc
