#include "egcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

#include "egcn/util.hpp"

namespace egcn {

namespace {

// Builds CSR neighbor lists and the orientation-closed edge_index from
// per-node sorted target lists.
void finalize(PopulationGraph& g, const std::vector<std::vector<int>>& adj) {
  const int n = g.n_nodes;
  g.adj_offsets.assign(n + 1, 0);
  for (int i = 0; i < n; ++i)
    g.adj_offsets[i + 1] = g.adj_offsets[i] + static_cast<int>(adj[i].size());
  g.adj_targets.clear();
  g.adj_targets.reserve(g.adj_offsets[n]);
  g.edge_index.clear();
  g.edge_index.reserve(g.adj_offsets[n]);
  for (int i = 0; i < n; ++i)
    for (int j : adj[i]) {
      g.adj_targets.push_back(j);
      g.edge_index.emplace_back(i, j);
    }
}

}  // namespace

PopulationGraph PopulationGraph::from_sites(const std::vector<std::string>& sites) {
  if (sites.empty()) throw std::invalid_argument("from_sites: empty site list");
  const int n = static_cast<int>(sites.size());
  // group nodes by site; within a group every distinct pair is an edge
  std::vector<std::vector<int>> adj(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sites[a] < sites[b]; });
  int lo = 0;
  while (lo < n) {
    int hi = lo;
    while (hi < n && sites[order[hi]] == sites[order[lo]]) ++hi;
    for (int a = lo; a < hi; ++a)
      for (int b = lo; b < hi; ++b)
        if (a != b) adj[order[a]].push_back(order[b]);
    lo = hi;
  }
  for (auto& lst : adj) std::sort(lst.begin(), lst.end());
  PopulationGraph g;
  g.n_nodes = n;
  g.site_labels = sites;
  finalize(g, adj);
  return g;
}

PopulationGraph PopulationGraph::from_predicate(
    int n, const std::function<bool(int, int)>& connected) {
  if (n <= 0) throw std::invalid_argument("from_predicate: n must be positive");
  if (!connected) throw std::invalid_argument("from_predicate: null predicate");
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (connected(i, j)) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
  PopulationGraph g;
  g.n_nodes = n;
  finalize(g, adj);
  return g;
}

int PopulationGraph::degree(int i) const {
  if (i < 0 || i >= n_nodes) throw std::invalid_argument("degree: node out of range");
  return adj_offsets[i + 1] - adj_offsets[i];
}

void PopulationGraph::validate() const {
  if (n_nodes <= 0) throw std::invalid_argument("graph: no nodes");
  if (static_cast<int>(adj_offsets.size()) != n_nodes + 1)
    throw std::invalid_argument("graph: bad adjacency offsets");
  for (const auto& [src, dst] : edge_index) {
    if (src < 0 || src >= n_nodes || dst < 0 || dst >= n_nodes)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (src == dst) throw std::invalid_argument("graph: self-loop in edge_index");
  }
  // closed under orientation reversal
  auto sorted = edge_index;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [src, dst] : edge_index)
    if (!std::binary_search(sorted.begin(), sorted.end(), std::make_pair(dst, src)))
      throw std::invalid_argument("graph: edge_index not symmetric");
}

SparseMatrix normalized_laplacian(const PopulationGraph& g) {
  g.validate();
  const int n = g.n_nodes;
  std::vector<double> dinv_sqrt(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int d = g.adj_offsets[i + 1] - g.adj_offsets[i];
    if (d > 0) dinv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  std::vector<Triplet> t;
  t.reserve(g.adj_targets.size() + static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 1.0});
    for (int k = g.adj_offsets[i]; k < g.adj_offsets[i + 1]; ++k) {
      const int j = g.adj_targets[k];
      t.push_back({i, j, -dinv_sqrt[i] * dinv_sqrt[j]});
    }
  }
  return SparseMatrix::from_triplets(n, n, t, /*symmetric=*/true);
}

ScaledLaplacian scaled_laplacian(const SparseMatrix& l, double lambda_max) {
  if (!(lambda_max > 0.0))
    throw std::invalid_argument("scaled_laplacian: lambda_max must be positive");
  if (l.rows != l.cols) throw std::invalid_argument("scaled_laplacian: not square");
  const double c = 2.0 / lambda_max;
  std::vector<Triplet> t;
  t.reserve(l.nnz());
  for (int i = 0; i < l.rows; ++i)
    for (int k = l.row_offsets[i]; k < l.row_offsets[i + 1]; ++k) {
      const int j = l.col_indices[k];
      const double v = c * l.values[k] - (i == j ? 1.0 : 0.0);
      if (v != 0.0) t.push_back({i, j, v});
    }
  ScaledLaplacian out;
  out.matrix = std::make_shared<const SparseMatrix>(
      SparseMatrix::from_triplets(l.rows, l.cols, t, l.symmetric));
  out.lambda_max = lambda_max;
  return out;
}

double power_iteration_lambda_max(const SparseMatrix& l, int iters,
                                  unsigned long long seed) {
  if (l.rows != l.cols || l.rows == 0)
    throw std::invalid_argument("power_iteration_lambda_max: not square");
  const int n = l.rows;
  std::mt19937_64 rng(seed);
  std::vector<double> v(n), w(n);
  for (double& x : v) x = normal01(rng);
  auto norm = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    return std::sqrt(s);
  };
  double nv = norm(v);
  if (nv == 0.0) v[0] = 1.0, nv = 1.0;
  for (double& x : v) x /= nv;
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = l.row_offsets[i]; k < l.row_offsets[i + 1]; ++k)
        w[i] += l.values[k] * v[l.col_indices[k]];
    lambda = 0.0;
    for (int i = 0; i < n; ++i) lambda += v[i] * w[i];
    const double nw = norm(w);
    if (nw < 1e-300) break;  // v is in the null space; lambda stays at the quotient
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
  }
  return lambda;
}

std::optional<int> hop_distance(const PopulationGraph& g, int i, int j) {
  if (i < 0 || i >= g.n_nodes || j < 0 || j >= g.n_nodes)
    throw std::invalid_argument("hop_distance: node out of range");
  if (i == j) return 0;
  std::vector<int> dist(g.n_nodes, -1);
  std::queue<int> q;
  dist[i] = 0;
  q.push(i);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int k = g.adj_offsets[u]; k < g.adj_offsets[u + 1]; ++k) {
      const int v = g.adj_targets[k];
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        if (v == j) return dist[v];
        q.push(v);
      }
    }
  }
  return std::nullopt;
}

int connected_components(const PopulationGraph& g) {
  std::vector<int> comp(g.n_nodes, -1);
  int count = 0;
  for (int s = 0; s < g.n_nodes; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = count;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int k = g.adj_offsets[u]; k < g.adj_offsets[u + 1]; ++k) {
        const int v = g.adj_targets[k];
        if (comp[v] < 0) {
          comp[v] = count;
          q.push(v);
        }
      }
    }
    ++count;
  }
  return count;
}

}  // namespace egcn
