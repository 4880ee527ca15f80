#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fgc/discretize.hpp"
#include "fgc/embedding.hpp"
#include "fgc/fairness.hpp"
#include "fgc/rng.hpp"

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

double alignment(const MatrixXd& q, const MatrixXd& u, const MatrixXd& r) {
  return (q.transpose() * u * r).trace();
}

}  // namespace

TEST_CASE("procrustes rotation on aligned inputs is the identity") {
  const MatrixXd u = fgc::random_orthonormal(8, 3, 1);
  const MatrixXd r = fgc::procrustes_rotation(u, u);
  CHECK((r - MatrixXd::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("procrustes rotation undoes a planted rotation") {
  fgc::Rng rng(3);
  const MatrixXd q = fgc::random_orthonormal(10, 4, 7);
  const MatrixXd rot = fgc::random_orthonormal(4, 4, 8);
  const MatrixXd u = q * rot.transpose();  // then U rot == Q
  const MatrixXd r = fgc::procrustes_rotation(q, u);
  CHECK((r - rot).norm() < 1e-10);
  CHECK((u * r - q).norm() < 1e-10);
}

TEST_CASE("procrustes rotation is orthogonal and optimal") {
  fgc::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 9;
    const int k = 4;
    MatrixXd q(d, k), u(d, k);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < k; ++j) {
        q(i, j) = rng.normal();
        u(i, j) = rng.normal();
      }
    const MatrixXd r = fgc::procrustes_rotation(q, u);
    CHECK((r.transpose() * r - MatrixXd::Identity(k, k)).norm() < 1e-10);

    const double star = alignment(q, u, r);
    // No sampled orthogonal matrix does better.
    for (int probe = 0; probe < 500; ++probe) {
      const MatrixXd cand = fgc::random_orthonormal(k, k, rng.next_u64());
      CHECK(alignment(q, u, cand) <= star + 1e-10);
    }
    // And the optimum value is the nuclear norm of Q^T U.
    Eigen::JacobiSVD<MatrixXd> svd(q.transpose() * u);
    CHECK(star == doctest::Approx(svd.singularValues().sum()).epsilon(1e-10));
  }
}

TEST_CASE("procrustes rotation is deterministic under degeneracy") {
  // Rank-deficient cross product: the sign pinning still fixes one answer.
  MatrixXd q = MatrixXd::Zero(6, 3);
  q(0, 0) = 1.0;
  MatrixXd u = MatrixXd::Zero(6, 3);
  u(0, 0) = 1.0;
  const MatrixXd r1 = fgc::procrustes_rotation(q, u);
  const MatrixXd r2 = fgc::procrustes_rotation(q, u);
  CHECK((r1 - r2).norm() == 0.0);
  CHECK((r1.transpose() * r1 - MatrixXd::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("row assignment takes the rotated argmax") {
  MatrixXd u(3, 2);
  u << 0.1, 0.9, 0.9, 0.1, 0.5, 0.5;
  const MatrixXd eye = MatrixXd::Identity(2, 2);
  const auto labels = fgc::discretize_q(u, eye);
  REQUIRE(labels.size() == 3);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 0);
  CHECK(labels[2] == 0);  // tie goes to the smaller index

  // A column-swapping rotation flips the assignment.
  MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  const auto flipped = fgc::discretize_q(u, swap);
  CHECK(flipped[0] == 0);
  CHECK(flipped[1] == 1);
}

TEST_CASE("indicator matrix is one-hot") {
  const MatrixXd q = fgc::indicator_matrix({2, 0, 1, 2}, 3);
  REQUIRE(q.rows() == 4);
  REQUIRE(q.cols() == 3);
  MatrixXd want(4, 3);
  want << 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  CHECK((q - want).norm() == 0.0);
}

TEST_CASE("alternating rotation and assignment never lowers alignment") {
  // With the binary indicator, row argmax is the exact assignment update
  // and Procrustes the exact rotation update, so alternation is monotone
  // in Tr(Q^T U R), equivalently monotone non-increasing in ||Q - U R||^2.
  fgc::Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 12;
    const int k = 3;
    MatrixXd u(d, k);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < k; ++j) u(i, j) = rng.normal();
    std::vector<int> labels(d);
    for (Index i = 0; i < d; ++i) labels[i] = int(rng.uniform_int(k));

    MatrixXd q = fgc::indicator_matrix(labels, k);
    MatrixXd r = fgc::procrustes_rotation(q, u);
    double score = alignment(q, u, r);
    double fit = (q - u * r).squaredNorm();
    for (int sweep = 0; sweep < 5; ++sweep) {
      labels = fgc::discretize_q(u, r);
      q = fgc::indicator_matrix(labels, k);
      r = fgc::procrustes_rotation(q, u);
      const double next = alignment(q, u, r);
      CHECK(next >= score - 1e-10);
      score = next;
      const double next_fit = (q - u * r).squaredNorm();
      CHECK(next_fit <= fit + 1e-10);
      fit = next_fit;
    }
  }
}

TEST_CASE("row argmax is exhaustively optimal for a fixed rotation") {
  // D=5, K=3: among all 3^5 binary indicators, the row-argmax assignment
  // maximizes Tr(Q^T U R).  Row-separability makes this exact.
  for (int trial = 0; trial < 8; ++trial) {
    const Index d = 5;
    const int k = 3;
    const MatrixXd u = fgc::random_orthonormal(d, k, 100 + std::uint64_t(trial));
    const MatrixXd r = fgc::random_orthonormal(k, k, 200 + std::uint64_t(trial));
    const auto labels = fgc::discretize_q(u, r);
    const double star = alignment(fgc::indicator_matrix(labels, k), u, r);

    std::vector<int> cand(d, 0);
    for (int code = 0; code < 243; ++code) {
      int c = code;
      for (Index i = 0; i < d; ++i) {
        cand[i] = c % k;
        c /= k;
      }
      CHECK(alignment(fgc::indicator_matrix(cand, k), u, r) <= star + 1e-12);
    }
  }
}

TEST_CASE("kmeans recovers separated blobs") {
  fgc::Rng rng(13);
  const Index per = 20;
  MatrixXd rows(3 * per, 2);
  for (Index c = 0; c < 3; ++c)
    for (Index i = 0; i < per; ++i) {
      rows(c * per + i, 0) = 10.0 * double(c) + 0.1 * rng.normal();
      rows(c * per + i, 1) = -5.0 * double(c) + 0.1 * rng.normal();
    }
  const auto res = fgc::lloyd_kmeans(rows, 3, 7, 5);
  REQUIRE(res.labels.size() == std::size_t(3 * per));
  for (Index c = 0; c < 3; ++c)
    for (Index i = 1; i < per; ++i)
      CHECK(res.labels[c * per + i] == res.labels[c * per]);
  CHECK(res.labels[0] != res.labels[per]);
  CHECK(res.labels[per] != res.labels[2 * per]);
  CHECK(res.wcss < 3 * per * 0.1);
}

TEST_CASE("kmeans attains the exhaustive optimum for k=2") {
  // All 2^8 assignments with optimal (centroid) centers per assignment.
  fgc::Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Index d = 8;
    MatrixXd rows(d, 2);
    for (Index i = 0; i < d; ++i) {
      rows(i, 0) = rng.normal();
      rows(i, 1) = rng.normal();
    }
    double best = 1e300;
    for (int mask = 1; mask < (1 << d) - 1; ++mask) {
      Eigen::RowVector2d c0 = Eigen::RowVector2d::Zero();
      Eigen::RowVector2d c1 = Eigen::RowVector2d::Zero();
      int n0 = 0, n1 = 0;
      for (Index i = 0; i < d; ++i) {
        if ((mask >> i) & 1) {
          c1 += rows.row(i);
          ++n1;
        } else {
          c0 += rows.row(i);
          ++n0;
        }
      }
      c0 /= double(n0);
      c1 /= double(n1);
      double wcss = 0.0;
      for (Index i = 0; i < d; ++i)
        wcss += ((mask >> i) & 1) ? (rows.row(i) - c1).squaredNorm()
                                  : (rows.row(i) - c0).squaredNorm();
      best = std::min(best, wcss);
    }
    const auto res = fgc::lloyd_kmeans(rows, 2, 23 + std::uint64_t(trial), 40);
    CHECK(res.wcss <= best * (1.0 + 1e-10) + 1e-12);
    CHECK(res.wcss >= best * (1.0 - 1e-10) - 1e-12);
  }
}

TEST_CASE("kmeans edge cases and determinism") {
  MatrixXd rows(4, 1);
  rows << 1, 2, 3, 4;
  const auto one = fgc::lloyd_kmeans(rows, 1, 3);
  CHECK(one.labels == std::vector<int>(4, 0));
  CHECK(one.centers(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(one.wcss == doctest::Approx(5.0).epsilon(1e-12));

  fgc::Rng rng(19);
  MatrixXd pts(30, 3);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 3; ++j) pts(i, j) = rng.normal();
  const auto a = fgc::lloyd_kmeans(pts, 4, 11, 10);
  const auto b = fgc::lloyd_kmeans(pts, 4, 11, 10);
  CHECK(a.labels == b.labels);
  CHECK((a.centers - b.centers).norm() == 0.0);
  CHECK(a.wcss == b.wcss);
}
