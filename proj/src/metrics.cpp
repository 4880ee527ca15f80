#include "fgc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fgc/graph.hpp"
#include "fgc/io.hpp"

namespace fgc {

using Eigen::Index;

std::string metric_report_header() {
  return "fs,ee,ce,balance,ratiocut,misclassified";
}

std::string metric_report_row(const MetricReport& report) {
  std::ostringstream os;
  os << format_double(report.fs) << "," << format_double(report.ee) << ","
     << format_double(report.ce) << "," << format_double(report.balance) << ","
     << format_double(report.ratiocut) << "," << report.misclassified;
  return os.str();
}

double f1_score(const VectorXd& w_true, const VectorXd& w_est, double edge_eps) {
  if (w_true.size() != w_est.size())
    throw std::invalid_argument("f1_score: size mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (Index e = 0; e < w_true.size(); ++e) {
    const bool t = w_true[e] > edge_eps;
    const bool est = w_est[e] > edge_eps;
    tp += t && est;
    fp += !t && est;
    fn += t && !est;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double estimation_error(const MatrixXd& lap_est, const MatrixXd& lap_true,
                        const FairnessSystem& fs) {
  const Index d = fs.num_nodes;
  if (lap_est.rows() != d || lap_est.cols() != d || lap_true.rows() != d ||
      lap_true.cols() != d)
    throw std::invalid_argument("estimation_error: shape mismatch");
  const double tr = lap_est.trace();
  if (tr <= 0.0) throw std::domain_error("estimation_error: Tr(L_hat) <= 0");
  const MatrixXd scaled = lap_est * (static_cast<double>(d) / tr);
  return (fs.z.transpose() * (scaled - lap_true) * fs.z).norm();
}

std::vector<int> hungarian_min(const MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("hungarian_min: not square");
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) match[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return match;
}

CeResult clustering_error(const std::vector<int>& est_labels,
                          const std::vector<int>& true_labels, int k) {
  if (est_labels.size() != true_labels.size() || est_labels.empty())
    throw std::invalid_argument("clustering_error: label size mismatch");
  if (k < 1) throw std::invalid_argument("clustering_error: need K >= 1");
  MatrixXd confusion = MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < est_labels.size(); ++i) {
    const int e = est_labels[i];
    const int t = true_labels[i];
    if (e < 0 || e >= k || t < 0 || t >= k)
      throw std::invalid_argument("clustering_error: label out of range");
    confusion(e, t) += 1.0;
  }
  // Maximize matched count = minimize (rowmax - C).
  const std::vector<int> perm = hungarian_min(-confusion);
  double matched = 0.0;
  for (int e = 0; e < k; ++e) matched += confusion(e, perm[static_cast<std::size_t>(e)]);
  CeResult out;
  out.perm = perm;
  out.misclassified = static_cast<int>(static_cast<double>(est_labels.size()) - matched);
  out.ce = static_cast<double>(out.misclassified) / static_cast<double>(est_labels.size());
  return out;
}

std::pair<double, VectorXd> balance(const std::vector<int>& labels,
                                    const std::vector<int>& group_labels,
                                    int k, int s) {
  if (labels.size() != group_labels.size() || labels.empty())
    throw std::invalid_argument("balance: size mismatch");
  if (k < 1 || s < 1) throw std::invalid_argument("balance: need K, S >= 1");
  MatrixXd counts = MatrixXd::Zero(k, s);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k || group_labels[i] < 0 || group_labels[i] >= s)
      throw std::invalid_argument("balance: label out of range");
    counts(labels[i], group_labels[i]) += 1.0;
  }
  VectorXd per_cluster(k);
  for (int c = 0; c < k; ++c) {
    const double lo = counts.row(c).minCoeff();
    const double hi = counts.row(c).maxCoeff();
    per_cluster[c] = lo > 0.0 ? lo / hi : 0.0;
  }
  return {per_cluster.mean(), per_cluster};
}

double ratiocut(const std::vector<int>& labels, const VectorXd& w, int k) {
  const Index d = nodes_from_edge_count(w.size());
  if (static_cast<Index>(labels.size()) != d)
    throw std::invalid_argument("ratiocut: label count mismatch");
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int c : labels) {
    if (c < 0 || c >= k) throw std::invalid_argument("ratiocut: label out of range");
    ++sizes[static_cast<std::size_t>(c)];
  }
  for (Index sz : sizes)
    if (sz == 0) throw std::invalid_argument("ratiocut: empty cluster");
  // Each cross edge (i,j) contributes w to both endpoints' clusters.
  std::vector<double> cut(static_cast<std::size_t>(k), 0.0);
  Index e = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j, ++e) {
      const int ci = labels[static_cast<std::size_t>(i)];
      const int cj = labels[static_cast<std::size_t>(j)];
      if (ci != cj) {
        cut[static_cast<std::size_t>(ci)] += w[e];
        cut[static_cast<std::size_t>(cj)] += w[e];
      }
    }
  double total = 0.0;
  for (int c = 0; c < k; ++c)
    total += cut[static_cast<std::size_t>(c)] / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
  return total;
}

BoundReport prop2_bound(const MatrixXd& lap_est, const MatrixXd& lap_true,
                        const MatrixXd& x, const MatrixXd& y_hat,
                        const FairnessSystem& fs, double mu, double beta) {
  const Index d = fs.num_nodes;
  if (lap_est.rows() != d || lap_true.rows() != d || x.rows() != d)
    throw std::invalid_argument("prop2_bound: shape mismatch");
  if (beta <= 0.0) throw std::invalid_argument("prop2_bound: beta must be positive");
  const double n = static_cast<double>(x.cols());
  const Index k = y_hat.cols();

  BoundReport rep;
  rep.c_d = std::sqrt(2.0) * (std::sqrt(static_cast<double>(d - 1)) + 1.0);
  const MatrixXd gram = x * x.transpose();
  rep.c_x = gram.squaredNorm() / (n * n);
  const MatrixXd adj_true = MatrixXd(lap_true.diagonal().asDiagonal()) - lap_true;
  const VectorXd w_star = pack_upper(adj_true);
  rep.c_r = regularizer_gradient(w_star, 1.0, beta).norm();

  const MatrixXd zg = fs.z.transpose() * gram * fs.z;
  const double embed_term = 2.0 * mu / n * (y_hat.transpose() * zg * y_hat).trace();
  const double root = std::sqrt(rep.c_x + embed_term + static_cast<double>(k) * mu * mu);
  rep.bound_value = rep.c_r * rep.c_d / (2.0 * beta) +
                    rep.c_d * rep.c_d / (2.0 * beta) * root;
  rep.lhs = (lap_est - lap_true).norm();
  rep.holds = rep.lhs <= rep.bound_value;
  return rep;
}

double prop1_second_term(int k, Index d, double c, double d_prob,
                         double epsilon, double ee, int constant) {
  if (c <= d_prob) throw std::invalid_argument("prop1_second_term: need c > d");
  if (k < 1 || d < 1) throw std::invalid_argument("prop1_second_term: need K, D >= 1");
  if (constant != 256 && constant != 512)
    throw std::invalid_argument("prop1_second_term: constant must be 256 or 512");
  const double diff = c - d_prob;
  return static_cast<double>(constant) * (4.0 + 2.0 * epsilon) *
         static_cast<double>(k) * static_cast<double>(k) /
         (static_cast<double>(d) * diff * diff) * ee * ee;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two same-length samples");
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace fgc
