#include "fgc/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "fgc/rng.hpp"

namespace fgc {

using Eigen::Index;

MatrixXd fair_embed_eigen(const MatrixXd& lap, const FairnessSystem& fs, int k) {
  if (lap.rows() != fs.num_nodes || lap.cols() != fs.num_nodes)
    throw std::invalid_argument("fair_embed_eigen: Laplacian shape mismatch");
  if (k < 1 || k > fs.z.cols())
    throw std::invalid_argument("fair_embed_eigen: need 1 <= K <= D-S+1");
  const MatrixXd m = fs.z.transpose() * lap * fs.z;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("fair_embed_eigen: eigendecomposition failed");
  return es.eigenvectors().leftCols(k);
}

MatrixXd random_orthonormal(Index rows, Index cols, std::uint64_t seed) {
  if (cols > rows) throw std::invalid_argument("random_orthonormal: cols > rows");
  Rng rng(seed);
  MatrixXd g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(rows, cols);
  // Pin column signs so the draw is unambiguous.
  const MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

double stiefel_objective(const MatrixXd& lap, const FairnessSystem& fs,
                         const MatrixXd& q, const MatrixXd& r, double mu,
                         double gamma, const MatrixXd& y) {
  const MatrixXd m = fs.z.transpose() * lap * fs.z;
  const MatrixXd a_lin = fs.z.transpose() * q * r.transpose();
  return mu * (y.transpose() * m * y).trace() - 2.0 * gamma * (a_lin.transpose() * y).trace();
}

namespace {

double orth_drift(const MatrixXd& y) {
  const Index k = y.cols();
  return (y.transpose() * y - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
}

void reorthonormalize(MatrixXd& y) {
  Eigen::HouseholderQR<MatrixXd> qr(y);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(y.rows(), y.cols());
  const MatrixXd r = qr.matrixQR().topRows(y.cols()).triangularView<Eigen::Upper>();
  for (Index j = 0; j < y.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  y = q;
}

}  // namespace

StiefelResult stiefel_minimize(const MatrixXd& lap, const FairnessSystem& fs,
                               const MatrixXd& q, const MatrixXd& r, double mu,
                               double gamma, const MatrixXd& y0,
                               const StiefelConfig& cfg) {
  const Index k = y0.cols();
  const Index n = y0.rows();
  if (n != fs.z.cols())
    throw std::invalid_argument("stiefel_minimize: Y rows != D-S+1");
  if (q.rows() != fs.num_nodes || q.cols() != k || r.rows() != k || r.cols() != k)
    throw std::invalid_argument("stiefel_minimize: Q/R shape mismatch");
  if (mu < 0.0 || gamma < 0.0)
    throw std::invalid_argument("stiefel_minimize: negative coefficients");
  if (orth_drift(y0) > 1e-8)
    throw std::invalid_argument("stiefel_minimize: warm start not orthonormal");

  const MatrixXd m_full = fs.z.transpose() * lap * fs.z;
  const MatrixXd m = 0.5 * (m_full + m_full.transpose());
  const MatrixXd a_lin = fs.z.transpose() * q * r.transpose();

  auto value = [&](const MatrixXd& y, const MatrixXd& my) {
    return mu * my.cwiseProduct(y).sum() - 2.0 * gamma * a_lin.cwiseProduct(y).sum();
  };
  auto gradient = [&](const MatrixXd& my) {
    return MatrixXd(2.0 * mu * my - 2.0 * gamma * a_lin);
  };

  StiefelResult out;
  MatrixXd y = y0;
  MatrixXd my = m * y;
  double f = value(y, my);
  MatrixXd g = gradient(my);
  const double scale = 1.0 + mu * m.norm() + 2.0 * gamma * a_lin.norm();
  const double tol = cfg.grad_tol * scale;

  MatrixXd y_prev, rg_prev;
  double tau = 1.0 / scale;
  for (int it = 0; it < cfg.max_iter; ++it) {
    // Tangent gradient and the Cayley direction factors U_c, V_c (n x 2K):
    // A = G Y^T - Y G^T = U_c V_c^T.
    MatrixXd rg = g - y * (g.transpose() * y);
    out.grad_norm = rg.norm();
    out.iterations = it;
    if (out.grad_norm <= tol) break;

    if (it > 0) {
      const MatrixXd sdiff = y - y_prev;
      const MatrixXd gdiff = rg - rg_prev;
      const double ss = sdiff.cwiseProduct(sdiff).sum();
      const double sg = std::fabs(sdiff.cwiseProduct(gdiff).sum());
      const double gg = gdiff.cwiseProduct(gdiff).sum();
      // Alternate the two Barzilai-Borwein steps.
      tau = (it % 2 == 0) ? (sg > 0 ? ss / sg : tau) : (gg > 0 ? sg / gg : tau);
      tau = std::min(std::max(tau, 1e-18), 1e18);
    }
    y_prev = y;
    rg_prev = rg;

    MatrixXd u_c(n, 2 * k), v_c(n, 2 * k);
    u_c.leftCols(k) = g;
    u_c.rightCols(k) = y;
    v_c.leftCols(k) = y;
    v_c.rightCols(k) = -g;
    const MatrixXd vu = v_c.transpose() * u_c;
    const MatrixXd vy = v_c.transpose() * y;

    // dphi/dtau at 0 is -<G, A Y> = -||A||^2 / 2, the reference decrease
    // rate for the backtracking condition.
    const double decrease = g.cwiseProduct(rg).sum();
    if (decrease <= 0.0) break;  // first-order stationary
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      MatrixXd core = MatrixXd::Identity(2 * k, 2 * k) + (0.5 * tau) * vu;
      MatrixXd y_try = y - tau * (u_c * core.partialPivLu().solve(vy));
      if (!y_try.allFinite()) {
        tau *= cfg.step_shrink;
        continue;
      }
      if (orth_drift(y_try) > 1e-8) reorthonormalize(y_try);
      const MatrixXd my_try = m * y_try;
      const double f_try = value(y_try, my_try);
      if (f_try <= f - cfg.armijo_rho * tau * decrease) {
        y = y_try;
        my = my_try;
        f = f_try;
        g = gradient(my);
        out.max_feasibility_drift = std::max(out.max_feasibility_drift, orth_drift(y));
        accepted = true;
        break;
      }
      tau *= cfg.step_shrink;
    }
    if (!accepted) break;  // no further descent possible at this scale
  }
  out.y = y;
  out.objective = f;
  return out;
}

}  // namespace fgc
