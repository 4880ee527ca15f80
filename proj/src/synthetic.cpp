#include "fgc/synthetic.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fgc/graph.hpp"
#include "fgc/rng.hpp"

namespace fgc {

using Eigen::Index;

namespace {

void validate(const VsbmParams& p) {
  if (p.num_nodes < 2) throw std::invalid_argument("vsbm: need >= 2 nodes");
  if (p.num_clusters < 1 || p.num_groups < 1)
    throw std::invalid_argument("vsbm: need >= 1 cluster and group");
  if (p.num_nodes % p.num_clusters != 0)
    throw std::invalid_argument("vsbm: K must divide D");
  for (double prob : {p.a, p.b, p.c, p.d})
    if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("vsbm: probability outside [0,1]");
  if (p.weight_lo <= 0.0 || p.weight_hi < p.weight_lo)
    throw std::invalid_argument("vsbm: need 0 < weight_lo <= weight_hi");
  if (!p.zeta.empty()) {
    if (static_cast<int>(p.zeta.size()) != p.num_groups)
      throw std::invalid_argument("vsbm: zeta size != S");
    double total = 0.0;
    for (double z : p.zeta) {
      if (z <= 0.0) throw std::invalid_argument("vsbm: zeta entries must be positive");
      total += z;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("vsbm: zeta must sum to 1");
  } else if ((p.num_nodes / p.num_clusters) % p.num_groups != 0) {
    throw std::invalid_argument("vsbm: balanced default needs K*S | D");
  }
}

// Base layout before the seed shuffle: contiguous cluster blocks, groups
// cycled inside each block (exact proportions in the balanced case).
void base_layout(const VsbmParams& p, std::vector<int>& clusters,
                 std::vector<int>& groups) {
  const Index d = p.num_nodes;
  const Index block = d / p.num_clusters;
  clusters.resize(static_cast<std::size_t>(d));
  groups.resize(static_cast<std::size_t>(d));
  std::vector<Index> per_block(static_cast<std::size_t>(p.num_groups));
  for (Index n = 0; n < d; ++n)
    clusters[static_cast<std::size_t>(n)] = static_cast<int>(n / block);
  if (p.zeta.empty()) {
    for (Index n = 0; n < d; ++n)
      groups[static_cast<std::size_t>(n)] = static_cast<int>((n % block) % p.num_groups);
    return;
  }
  // Largest-remainder split of each block by zeta, then cycle through the
  // groups taking one at a time while quota remains.
  for (Index blk = 0; blk < p.num_clusters; ++blk) {
    std::vector<double> frac(static_cast<std::size_t>(p.num_groups));
    Index assigned = 0;
    for (int s = 0; s < p.num_groups; ++s) {
      const double exact = p.zeta[static_cast<std::size_t>(s)] * static_cast<double>(block);
      per_block[static_cast<std::size_t>(s)] = static_cast<Index>(std::floor(exact));
      frac[static_cast<std::size_t>(s)] = exact - std::floor(exact);
      assigned += per_block[static_cast<std::size_t>(s)];
    }
    while (assigned < block) {
      int best = 0;
      for (int s = 1; s < p.num_groups; ++s)
        if (frac[static_cast<std::size_t>(s)] > frac[static_cast<std::size_t>(best)]) best = s;
      ++per_block[static_cast<std::size_t>(best)];
      frac[static_cast<std::size_t>(best)] = -1.0;
      ++assigned;
    }
    Index pos = blk * block;
    auto quota = per_block;
    while (pos < (blk + 1) * block) {
      for (int s = 0; s < p.num_groups && pos < (blk + 1) * block; ++s) {
        if (quota[static_cast<std::size_t>(s)] > 0) {
          groups[static_cast<std::size_t>(pos++)] = s;
          --quota[static_cast<std::size_t>(s)];
        }
      }
    }
  }
}

}  // namespace

GroundTruth vsbm_generate(const VsbmParams& params, std::uint64_t seed) {
  validate(params);
  const Index d = params.num_nodes;

  std::vector<int> base_clusters, base_groups;
  base_layout(params, base_clusters, base_groups);

  Rng root(seed);
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  root.shuffle(order);

  GroundTruth gt;
  gt.num_nodes = d;
  gt.num_clusters = params.num_clusters;
  gt.num_groups = params.num_groups;
  gt.clusters.resize(static_cast<std::size_t>(d));
  gt.groups.resize(static_cast<std::size_t>(d));
  for (Index n = 0; n < d; ++n) {
    gt.clusters[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])] =
        base_clusters[static_cast<std::size_t>(n)];
    gt.groups[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])] =
        base_groups[static_cast<std::size_t>(n)];
  }

  const Index p_edges = edge_count(d);
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    Rng rng = root.spawn(static_cast<std::uint64_t>(attempt) + 1);
    VectorXd w = VectorXd::Zero(p_edges);
    Index s = 0;
    for (Index i = 0; i < d; ++i) {
      for (Index j = i + 1; j < d; ++j, ++s) {
        const bool same_c = gt.clusters[static_cast<std::size_t>(i)] ==
                            gt.clusters[static_cast<std::size_t>(j)];
        const bool same_g = gt.groups[static_cast<std::size_t>(i)] ==
                            gt.groups[static_cast<std::size_t>(j)];
        const double prob = same_c ? (same_g ? params.a : params.b)
                                   : (same_g ? params.c : params.d);
        if (rng.bernoulli(prob))
          w[s] = rng.uniform(params.weight_lo, params.weight_hi);
      }
    }
    VectorXd deg = degree_apply(w);
    if ((deg.array() > 0.0).all()) {
      // Tr(L) = sum of degrees = 2 * sum(w); rescale to D.
      gt.w = w * (static_cast<double>(d) / (2.0 * w.sum()));
      return gt;
    }
  }
  throw std::runtime_error("vsbm_generate: isolated node after max_retries attempts");
}

SignalSample sample_signals(const GroundTruth& gt, Index n,
                            const NoiseSpec& noise, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_signals: need N >= 1");
  const Index d = gt.num_nodes;
  Rng rng(seed);

  SignalSample out;
  if (noise.sigma.size() > 0) {
    if (noise.sigma.size() != d)
      throw std::invalid_argument("sample_signals: sigma size != D");
    if ((noise.sigma.array() < 0.0).any())
      throw std::invalid_argument("sample_signals: negative sigma");
    out.sigma = noise.sigma;
  } else {
    if (noise.lo < 0.0 || noise.hi < noise.lo)
      throw std::invalid_argument("sample_signals: bad noise range");
    out.sigma.resize(d);
    for (Index i = 0; i < d; ++i) out.sigma[i] = rng.uniform(noise.lo, noise.hi);
  }

  const MatrixXd lap = laplacian_from_weights(gt.w);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(lap);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sample_signals: eigendecomposition failed");
  const VectorXd& lam = es.eigenvalues();
  const double cutoff = 1e-10 * lam[d - 1];
  VectorXd pinv_diag(d);
  for (Index i = 0; i < d; ++i) pinv_diag[i] = lam[i] > cutoff ? 1.0 / lam[i] : 0.0;

  MatrixXd cov = es.eigenvectors() * pinv_diag.asDiagonal() *
                 es.eigenvectors().transpose();
  cov += out.sigma.array().square().matrix().asDiagonal();

  Eigen::SelfAdjointEigenSolver<MatrixXd> esc(cov);
  if (esc.info() != Eigen::Success)
    throw std::runtime_error("sample_signals: covariance factorization failed");
  VectorXd root_diag = esc.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const MatrixXd root =
      esc.eigenvectors() * root_diag.asDiagonal() * esc.eigenvectors().transpose();

  MatrixXd gauss(d, n);
  for (Index col = 0; col < n; ++col)
    for (Index row = 0; row < d; ++row) gauss(row, col) = rng.normal();
  out.x = root * gauss;
  return out;
}

}  // namespace fgc
