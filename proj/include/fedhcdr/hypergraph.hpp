#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "fedhcdr/types.hpp"

namespace fedhcdr {

// Derived matrices of one hypergraph. Role-agnostic: pass H for the
// vertex-side hypergraph of users (hyperedges = items) and H transposed for
// the item hypergraph (hyperedges = users).
struct HypergraphBundle {
  SpMat incidence;     // H, vertices x hyperedges
  Vec debias;          // P diagonal, one weight per hyperedge, in [0,1)
  Vec vertex_degree;   // weighted vertex degrees
  Vec edge_degree;     // hyperedge degrees
  Vec selfloop;        // self-loop correction diagonal
  SpMat adjacency;     // A, normalized, zero diagonal, symmetric
  SpMat laplacian;     // L = I - A
  SpMat markov;        // M, random-walk transition
  Mat walk_features;   // columns diag(M^1) .. diag(M^T)
  std::vector<int> zero_degree_vertices;  // rows guarded by kDegreeEpsilon
};

// P_vv = 1 - d_v / sum(d); throws if any hyperedge has degree zero.
Vec debias_diagonal(const SpMat& H);

// (vertex degrees weighted by P, raw hyperedge degrees)
std::pair<Vec, Vec> degree_diagonals(const SpMat& H, const Vec& debias);

// Diagonal that cancels the self-loop mass of H P D_edge^{-1} H^T.
Vec selfloop_correction(const SpMat& H, const Vec& debias, const Vec& edge_degree);

std::pair<SpMat, SpMat> adjacency_and_laplacian(const SpMat& H);

SpMat markov_matrix(const SpMat& H);

// vertices x steps matrix of t-step return probabilities.
Mat walk_features(const SpMat& markov, int steps);

HypergraphBundle build_bundle(const SpMat& H, int walk_steps);

// "rows cols nnz" header followed by one "i j value" line per entry.
void dump_coordinate_triplets(const SpMat& m, const std::filesystem::path& path);

}  // namespace fedhcdr
