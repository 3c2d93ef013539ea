#include "fedhcdr/hypergraph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fedhcdr {

Vec debias_diagonal(const SpMat& H) {
  const Eigen::Index m = H.cols();
  Vec degree = Vec::Zero(m);
  for (Eigen::Index k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it) degree(it.col()) += it.value();
  const double total = degree.sum();
  for (Eigen::Index v = 0; v < m; ++v)
    if (degree(v) == 0.0)
      throw std::invalid_argument("debias_diagonal: hyperedge " + std::to_string(v) +
                                  " has degree zero; filter upstream");
  return (1.0 - degree.array() / total).matrix();
}

std::pair<Vec, Vec> degree_diagonals(const SpMat& H, const Vec& debias) {
  Vec vertex = Vec::Zero(H.rows());
  Vec edge = Vec::Zero(H.cols());
  for (Eigen::Index k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it) {
      vertex(it.row()) += it.value() * debias(it.col());
      edge(it.col()) += it.value();
    }
  return {vertex, edge};
}

Vec selfloop_correction(const SpMat& H, const Vec& debias, const Vec& edge_degree) {
  Vec d = Vec::Zero(H.rows());
  for (Eigen::Index k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it)
      d(it.row()) += it.value() * debias(it.col()) / edge_degree(it.col());
  return d;
}

namespace {

// Shared core of Eqs for A/L/M: the off-diagonal part of
// H P D_edge^{-1} H^T together with the three diagonals. The diagonal of the
// product equals the self-loop correction for binary H, so dropping it keeps
// diag(A) at exactly zero.
struct HypergraphCore {
  Vec debias;
  Vec vertex_degree;
  Vec edge_degree;
  Vec selfloop;
  SpMat offdiag;  // H P D_edge^{-1} H^T with the diagonal removed
};

HypergraphCore build_core(const SpMat& H) {
  HypergraphCore core;
  core.debias = debias_diagonal(H);
  std::tie(core.vertex_degree, core.edge_degree) = degree_diagonals(H, core.debias);
  core.selfloop = selfloop_correction(H, core.debias, core.edge_degree);

  SpMat scaled = H;
  for (Eigen::Index k = 0; k < scaled.outerSize(); ++k)
    for (SpMat::InnerIterator it(scaled, k); it; ++it)
      it.valueRef() *= core.debias(it.col()) / core.edge_degree(it.col());
  SpMat product = (scaled * SpMat(H.transpose())).pruned();

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(product.nonZeros()));
  for (Eigen::Index k = 0; k < product.outerSize(); ++k)
    for (SpMat::InnerIterator it(product, k); it; ++it)
      if (it.row() != it.col()) trips.emplace_back(it.row(), it.col(), it.value());
  core.offdiag.resize(H.rows(), H.rows());
  core.offdiag.setFromTriplets(trips.begin(), trips.end());
  core.offdiag.makeCompressed();
  return core;
}

Vec guarded_degrees(const Vec& vertex_degree) {
  Vec g = vertex_degree;
  for (Eigen::Index u = 0; u < g.size(); ++u)
    if (g(u) == 0.0) g(u) = kDegreeEpsilon;
  return g;
}

SpMat scale_offdiag(const SpMat& offdiag, const Vec& left, const Vec& right) {
  SpMat out = offdiag;
  for (Eigen::Index k = 0; k < out.outerSize(); ++k)
    for (SpMat::InnerIterator it(out, k); it; ++it)
      it.valueRef() *= left(it.row()) * right(it.col());
  return out;
}

SpMat sparse_identity(Eigen::Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

std::pair<SpMat, SpMat> adjacency_and_laplacian(const SpMat& H) {
  const HypergraphCore core = build_core(H);
  const Vec inv_sqrt = guarded_degrees(core.vertex_degree).array().rsqrt().matrix();
  SpMat A = scale_offdiag(core.offdiag, inv_sqrt, inv_sqrt);
  SpMat L = (sparse_identity(H.rows()) - A).pruned();
  L.makeCompressed();
  return {std::move(A), std::move(L)};
}

SpMat markov_matrix(const SpMat& H) {
  const HypergraphCore core = build_core(H);
  const Vec inv = guarded_degrees(core.vertex_degree).array().inverse().matrix();
  return scale_offdiag(core.offdiag, inv, Vec::Ones(H.rows()));
}

Mat walk_features(const SpMat& markov, int steps) {
  if (steps < 1) throw std::invalid_argument("walk_features: steps must be >= 1");
  Mat feats(markov.rows(), steps);
  SpMat power = markov;
  for (int t = 0; t < steps; ++t) {
    for (Eigen::Index u = 0; u < markov.rows(); ++u) feats(u, t) = power.coeff(u, u);
    if (t + 1 < steps) power = (power * markov).pruned();
  }
  return feats;
}

HypergraphBundle build_bundle(const SpMat& H, int walk_steps) {
  HypergraphBundle b;
  b.incidence = H;
  const HypergraphCore core = build_core(H);
  b.debias = core.debias;
  b.vertex_degree = core.vertex_degree;
  b.edge_degree = core.edge_degree;
  b.selfloop = core.selfloop;
  for (Eigen::Index u = 0; u < b.vertex_degree.size(); ++u)
    if (b.vertex_degree(u) == 0.0) b.zero_degree_vertices.push_back(static_cast<int>(u));

  const Vec inv_sqrt = guarded_degrees(core.vertex_degree).array().rsqrt().matrix();
  const Vec inv = guarded_degrees(core.vertex_degree).array().inverse().matrix();
  b.adjacency = scale_offdiag(core.offdiag, inv_sqrt, inv_sqrt);
  b.laplacian = (sparse_identity(H.rows()) - b.adjacency).pruned();
  b.laplacian.makeCompressed();
  b.markov = scale_offdiag(core.offdiag, inv, Vec::Ones(H.rows()));
  b.walk_features = walk_features(b.markov, walk_steps);
  return b;
}

void dump_coordinate_triplets(const SpMat& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[64];
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
}

}  // namespace fedhcdr
