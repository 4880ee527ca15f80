#include "fgc/filter.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fgc {

using Eigen::Index;

MatrixXd denoise(const MatrixXd& x_obs, const MatrixXd& lap,
                 const VectorXd& upsilon, double xi,
                 const DenoiseOptions& opts, const MatrixXd* warm) {
  const Index d = x_obs.rows();
  const Index n = x_obs.cols();
  if (lap.rows() != d || lap.cols() != d)
    throw std::invalid_argument("denoise: Laplacian shape mismatch");
  if (upsilon.size() != d) throw std::invalid_argument("denoise: upsilon size mismatch");
  if ((upsilon.array() <= 0.0).any())
    throw std::invalid_argument("denoise: upsilon must be positive");
  if (xi < 0.0) throw std::invalid_argument("denoise: xi must be >= 0");
  if (warm && (warm->rows() != d || warm->cols() != n))
    throw std::invalid_argument("denoise: warm start shape mismatch");

  if (xi == 0.0) return x_obs;

  MatrixXd x = warm ? *warm : x_obs;
  // Jacobi preconditioner: diagonal of diag(upsilon) + xi L.
  const VectorXd jacobi = (upsilon + xi * lap.diagonal()).cwiseInverse();
  const int max_iter = opts.max_iter_factor * static_cast<int>(d);

  VectorXd r(d), z(d), p(d), ap(d);
  for (Index col = 0; col < n; ++col) {
    const VectorXd b = upsilon.cwiseProduct(x_obs.col(col));
    const double target = opts.tol * b.norm();
    VectorXd xc = x.col(col);
    r = b - upsilon.cwiseProduct(xc) - xi * (lap * xc);
    if (r.norm() <= target) continue;
    z = jacobi.cwiseProduct(r);
    p = z;
    double rz = r.dot(z);
    bool ok = false;
    for (int it = 0; it < max_iter; ++it) {
      ap = upsilon.cwiseProduct(p) + xi * (lap * p);
      const double denom = p.dot(ap);
      if (denom <= 0.0)
        throw std::runtime_error("denoise: system not positive definite");
      const double step = rz / denom;
      xc += step * p;
      r -= step * ap;
      if (r.norm() <= target) {
        ok = true;
        break;
      }
      z = jacobi.cwiseProduct(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    if (!ok)
      throw std::runtime_error("denoise: CG stalled on column " +
                               std::to_string(col) + ", residual " +
                               std::to_string(r.norm()));
    x.col(col) = xc;
  }
  return x;
}

VectorXd update_upsilon(const MatrixXd& x_obs, const MatrixXd& x) {
  if (x_obs.rows() != x.rows() || x_obs.cols() != x.cols())
    throw std::invalid_argument("update_upsilon: shape mismatch");
  const double root_n = std::sqrt(static_cast<double>(x.cols()));
  VectorXd upsilon(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const double res = (x_obs.row(i) - x.row(i)).norm();
    upsilon[i] = res > root_n / kUpsilonMax ? root_n / res : kUpsilonMax;
  }
  return upsilon;
}

}  // namespace fgc
