#include "fgc/graph.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgc/kernels.hpp"

namespace fgc {

using Eigen::Index;

Index edge_count(Index num_nodes) {
  if (num_nodes < 1) throw std::invalid_argument("edge_count: need >= 1 node");
  return num_nodes * (num_nodes - 1) / 2;
}

Index nodes_from_edge_count(Index p) {
  // Solve D(D-1)/2 = p for integer D.
  const Index d = static_cast<Index>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(p))) / 2.0 + 0.5);
  if (d < 1 || d * (d - 1) / 2 != p)
    throw std::invalid_argument("nodes_from_edge_count: not a triangular size");
  return d;
}

Index edge_slot(Index i, Index j, Index d) {
  if (i < 0 || j <= i || j >= d) throw std::invalid_argument("edge_slot: need 0 <= i < j < D");
  return i * (d - 1) - i * (i - 1) / 2 + (j - i - 1);
}

std::pair<Index, Index> slot_edge(Index slot, Index d) {
  if (slot < 0 || slot >= edge_count(d)) throw std::invalid_argument("slot_edge: out of range");
  Index i = 0, base = 0;
  while (base + (d - 1 - i) <= slot) {
    base += d - 1 - i;
    ++i;
  }
  return {i, i + 1 + (slot - base)};
}

VectorXd pack_upper(const MatrixXd& w_mat) {
  const Index d = w_mat.rows();
  if (w_mat.cols() != d) throw std::invalid_argument("pack_upper: matrix not square");
  for (Index i = 0; i < d; ++i) {
    if (w_mat(i, i) != 0.0) throw std::invalid_argument("pack_upper: nonzero diagonal");
    for (Index j = i + 1; j < d; ++j)
      if (w_mat(i, j) != w_mat(j, i)) throw std::invalid_argument("pack_upper: matrix not symmetric");
  }
  VectorXd w(edge_count(d));
  Index s = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) w[s++] = w_mat(i, j);
  return w;
}

MatrixXd unpack_upper(const VectorXd& w) {
  const Index d = nodes_from_edge_count(w.size());
  MatrixXd w_mat = MatrixXd::Zero(d, d);
  Index s = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      w_mat(i, j) = w[s];
      w_mat(j, i) = w[s];
      ++s;
    }
  return w_mat;
}

VectorXd degree_apply(const VectorXd& w) {
  const Index d = nodes_from_edge_count(w.size());
  VectorXd deg = VectorXd::Zero(d);
  Index s = 0;
  for (Index i = 0; i + 1 < d; ++i) {
    const Index m = d - 1 - i;
    deg[i] += kernels::active().sum(w.data() + s, static_cast<std::size_t>(m));
    deg.segment(i + 1, m) += w.segment(s, m);
    s += m;
  }
  return deg;
}

VectorXd degree_adjoint(const VectorXd& deg) {
  const Index d = deg.size();
  VectorXd out(edge_count(d));
  Index s = 0;
  for (Index i = 0; i + 1 < d; ++i) {
    const Index m = d - 1 - i;
    kernels::active().add_scalar(out.data() + s, deg[i], deg.data() + i + 1,
                                 static_cast<std::size_t>(m));
    s += m;
  }
  return out;
}

MatrixXd laplacian_from_weights(const VectorXd& w) {
  MatrixXd lap = -unpack_upper(w);
  lap.diagonal() = degree_apply(w);
  return lap;
}

double smoothness(const MatrixXd& x, const MatrixXd& lap) {
  if (lap.rows() != lap.cols() || x.rows() != lap.rows())
    throw std::invalid_argument("smoothness: dimension mismatch");
  if (x.cols() == 0) throw std::invalid_argument("smoothness: no signals");
  return (lap * x).cwiseProduct(x).sum() / static_cast<double>(x.cols());
}

namespace {
VectorXd checked_degrees(const VectorXd& w, const char* who) {
  VectorXd deg = degree_apply(w);
  if ((deg.array() <= kDegreeFloor).any())
    throw std::domain_error(std::string(who) + ": degree at or below 1e-12, log barrier undefined");
  return deg;
}
}  // namespace

double regularizer(const VectorXd& w, double alpha, double beta) {
  VectorXd deg = checked_degrees(w, "regularizer");
  return -alpha * deg.array().log().sum() + 2.0 * beta * w.squaredNorm();
}

VectorXd regularizer_gradient(const VectorXd& w, double alpha, double beta) {
  VectorXd deg = checked_degrees(w, "regularizer_gradient");
  return -alpha * degree_adjoint(deg.cwiseInverse()) + 4.0 * beta * w;
}

MatrixXd regularizer_hessian(const VectorXd& w, double alpha, double beta) {
  VectorXd deg = checked_degrees(w, "regularizer_hessian");
  const Index d = deg.size();
  const VectorXd g = deg.array().square().inverse();
  const Index p = w.size();
  MatrixXd h = MatrixXd::Zero(p, p);
  // H[e,f] = alpha * sum of g_i over shared endpoints i of edges e and f.
  std::vector<std::pair<Index, Index>> ends(static_cast<std::size_t>(p));
  Index s = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) ends[static_cast<std::size_t>(s++)] = {i, j};
  for (Index e = 0; e < p; ++e) {
    const auto [ei, ej] = ends[static_cast<std::size_t>(e)];
    for (Index f = e; f < p; ++f) {
      const auto [fi, fj] = ends[static_cast<std::size_t>(f)];
      double acc = 0.0;
      if (ei == fi || ei == fj) acc += g[ei];
      if (ej == fi || ej == fj) acc += g[ej];
      if (acc != 0.0) {
        h(e, f) += alpha * acc;
        h(f, e) = h(e, f);
      }
    }
    h(e, e) += 4.0 * beta;
  }
  return h;
}

void write_graph(std::ostream& out, const VectorXd& w, Index d) {
  if (w.size() != edge_count(d)) throw std::invalid_argument("write_graph: size mismatch");
  out << "fgc-graph v1 D=" << d << "\n";
  std::ostringstream line;
  line.precision(17);
  Index s = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j, ++s) {
      if (w[s] == 0.0) continue;
      if (!std::isfinite(w[s])) throw std::invalid_argument("write_graph: non-finite weight");
      line.str("");
      line << i + 1 << " " << j + 1 << " " << w[s] << "\n";
      out << line.str();
    }
  if (!out) throw std::runtime_error("write_graph: stream failure");
}

std::pair<VectorXd, Index> read_graph(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("read_graph: empty input");
  std::istringstream hs(header);
  std::string magic, dfield;
  hs >> magic >> dfield;
  Index d = -1;
  if (magic == "fgc-graph" && dfield == "v1") {
    std::string dpart;
    hs >> dpart;
    if (dpart.rfind("D=", 0) == 0) {
      try {
        d = static_cast<Index>(std::stoll(dpart.substr(2)));
      } catch (const std::exception&) {
        d = -1;
      }
    }
  }
  if (d < 1) throw std::runtime_error("read_graph: malformed header '" + header + "'");

  VectorXd w = VectorXd::Zero(edge_count(d));
  std::vector<bool> seen(static_cast<std::size_t>(w.size()), false);
  std::string line;
  Index lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long i = 0, j = 0;
    double weight = 0.0;
    if (!(ls >> i >> j >> weight))
      throw std::runtime_error("read_graph: malformed edge at line " + std::to_string(lineno));
    if (i < 1 || j < 1 || i > d || j > d || i >= j)
      throw std::runtime_error("read_graph: bad endpoints at line " + std::to_string(lineno));
    if (!std::isfinite(weight))
      throw std::runtime_error("read_graph: non-finite weight at line " + std::to_string(lineno));
    const Index s = edge_slot(i - 1, j - 1, d);
    if (seen[static_cast<std::size_t>(s)])
      throw std::runtime_error("read_graph: duplicate edge at line " + std::to_string(lineno));
    seen[static_cast<std::size_t>(s)] = true;
    w[s] = weight;
  }
  return {w, d};
}

}  // namespace fgc
