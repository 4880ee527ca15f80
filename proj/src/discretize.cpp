#include "fgc/discretize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fgc/rng.hpp"

namespace fgc {

using Eigen::Index;
using Eigen::VectorXd;

MatrixXd procrustes_rotation(const MatrixXd& q, const MatrixXd& u) {
  if (q.rows() != u.rows() || q.cols() != u.cols())
    throw std::invalid_argument("procrustes_rotation: shape mismatch");
  const MatrixXd m = q.transpose() * u;
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  MatrixXd left = svd.matrixU();
  MatrixXd right = svd.matrixV();
  for (Index col = 0; col < left.cols(); ++col) {
    Index pivot = 0;
    for (Index row = 1; row < left.rows(); ++row)
      if (std::fabs(left(row, col)) > std::fabs(left(pivot, col))) pivot = row;
    if (left(pivot, col) < 0.0) {
      left.col(col) = -left.col(col);
      right.col(col) = -right.col(col);
    }
  }
  return right * left.transpose();
}

std::vector<int> discretize_q(const MatrixXd& u, const MatrixXd& r) {
  if (u.cols() != r.rows() || r.rows() != r.cols())
    throw std::invalid_argument("discretize_q: shape mismatch");
  const MatrixXd ur = u * r;
  std::vector<int> labels(static_cast<std::size_t>(ur.rows()));
  for (Index i = 0; i < ur.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < ur.cols(); ++c)
      if (ur(i, c) > ur(i, best)) best = c;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

MatrixXd indicator_matrix(const std::vector<int>& labels, int k) {
  MatrixXd q = MatrixXd::Zero(static_cast<Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw std::invalid_argument("indicator_matrix: label out of range");
    q(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return q;
}

namespace {

double sq_dist_to(const MatrixXd& rows, Index i, const VectorXd& center) {
  return (rows.row(i).transpose() - center).squaredNorm();
}

struct SingleRun {
  std::vector<int> labels;
  MatrixXd centers;
  double wcss = std::numeric_limits<double>::infinity();
};

SingleRun kmeans_once(const MatrixXd& rows, int k, Rng& rng, int max_iter) {
  const Index d = rows.rows();
  const Index dim = rows.cols();
  SingleRun run;
  run.centers.resize(k, dim);

  // k-means++: first center uniform, the rest proportional to squared
  // distance from the chosen set.
  std::vector<Index> chosen;
  chosen.push_back(static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(d))));
  run.centers.row(0) = rows.row(chosen[0]);
  VectorXd dist2(d);
  for (Index i = 0; i < d; ++i)
    dist2[i] = sq_dist_to(rows, i, run.centers.row(0).transpose());
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = d - 1;
      for (Index i = 0; i < d; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(d)));
    }
    run.centers.row(c) = rows.row(pick);
    for (Index i = 0; i < d; ++i)
      dist2[i] = std::min(dist2[i], sq_dist_to(rows, i, run.centers.row(c).transpose()));
  }

  run.labels.assign(static_cast<std::size_t>(d), 0);
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < d; ++i) {
      Index best = 0;
      double best_d = sq_dist_to(rows, i, run.centers.row(0).transpose());
      for (int c = 1; c < k; ++c) {
        const double dc = sq_dist_to(rows, i, run.centers.row(c).transpose());
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (run.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        run.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    counts.assign(static_cast<std::size_t>(k), 0);
    MatrixXd sums = MatrixXd::Zero(k, dim);
    for (Index i = 0; i < d; ++i) {
      sums.row(run.labels[static_cast<std::size_t>(i)]) += rows.row(i);
      ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        run.centers.row(c) =
            sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < d; ++i) {
          const double di = sq_dist_to(
              rows, i, run.centers.row(run.labels[static_cast<std::size_t>(i)]).transpose());
          if (di > far_d) {
            far_d = di;
            far = i;
          }
        }
        run.centers.row(c) = rows.row(far);
        run.labels[static_cast<std::size_t>(far)] = c;
      }
    }
  }

  run.wcss = 0.0;
  for (Index i = 0; i < d; ++i)
    run.wcss += sq_dist_to(
        rows, i, run.centers.row(run.labels[static_cast<std::size_t>(i)]).transpose());
  return run;
}

}  // namespace

KmeansResult lloyd_kmeans(const MatrixXd& rows, int k, std::uint64_t seed,
                          int restarts, int max_iter) {
  if (k < 1) throw std::invalid_argument("lloyd_kmeans: need K >= 1");
  if (rows.rows() < k)
    throw std::invalid_argument("lloyd_kmeans: fewer points than clusters");
  if (restarts < 1 || max_iter < 1)
    throw std::invalid_argument("lloyd_kmeans: restarts and max_iter must be >= 1");

  Rng root(seed);
  SingleRun best;
  for (int rep = 0; rep < restarts; ++rep) {
    Rng rng = root.spawn(static_cast<std::uint64_t>(rep) + 1);
    SingleRun run = kmeans_once(rows, k, rng, max_iter);
    if (run.wcss < best.wcss) best = std::move(run);
  }
  KmeansResult out;
  out.labels = std::move(best.labels);
  out.centers = std::move(best.centers);
  out.wcss = best.wcss;
  return out;
}

}  // namespace fgc
