#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egcn/sparse.hpp"

namespace egcn {

// Undirected population graph over subjects.  edge_index stores both
// orientations of every undirected edge and never contains self-loops;
// the self term of attention is added inside the layer, not here.
struct PopulationGraph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edge_index;  // (src, dst), both orientations
  std::vector<std::string> site_labels;         // empty when predicate-built

  // neighbor lists in CSR form; targets sorted ascending within each node
  std::vector<int> adj_offsets;  // size n_nodes + 1
  std::vector<int> adj_targets;

  // Edge (i, j) for i != j iff sites[i] == sites[j].
  static PopulationGraph from_sites(const std::vector<std::string>& sites);

  // Generic similarity predicate; called once per unordered pair i < j.
  static PopulationGraph from_predicate(
      int n, const std::function<bool(int, int)>& connected);

  int undirected_edge_count() const {
    return static_cast<int>(edge_index.size() / 2);
  }
  int degree(int i) const;
  void validate() const;  // throws std::invalid_argument on broken invariants
};

// Symmetric normalized Laplacian L = I - D^(-1/2) A D^(-1/2) over the
// unweighted adjacency; a zero-degree node contributes the identity row.
SparseMatrix normalized_laplacian(const PopulationGraph& g);

// L~ = (2/lambda_max) L - I.  With the default lambda_max = 2 every
// eigenvalue lands in [-1, 1]; entries that become exactly zero are dropped.
struct ScaledLaplacian {
  std::shared_ptr<const SparseMatrix> matrix;
  double lambda_max = 2.0;
  int n() const { return matrix ? matrix->rows : 0; }
};

ScaledLaplacian scaled_laplacian(const SparseMatrix& l, double lambda_max = 2.0);

// Rayleigh-quotient estimate of the largest eigenvalue of a symmetric
// matrix by power iteration; deterministic under seed.
double power_iteration_lambda_max(const SparseMatrix& l, int iters = 100,
                                  unsigned long long seed = 0);

// BFS shortest-path length; nullopt when j is unreachable from i.
std::optional<int> hop_distance(const PopulationGraph& g, int i, int j);

int connected_components(const PopulationGraph& g);

}  // namespace egcn
