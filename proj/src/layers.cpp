#include "egcn/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "egcn/util.hpp"

namespace egcn {

Matrix glorot_uniform(int rows, int cols, int fan_in, int fan_out,
                      std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(rows, cols);
  for (double& v : m.data) v = uniform_sym(rng, limit);
  return m;
}

ChebConvLayer ChebConvLayer::glorot(int in_dim, int out_dim, int k,
                                    std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("ChebConvLayer: K must be >= 1");
  if (in_dim < 1 || out_dim < 1)
    throw std::invalid_argument("ChebConvLayer: dims must be positive");
  ChebConvLayer l;
  l.k = k;
  l.theta.reserve(k);
  for (int i = 0; i < k; ++i)
    l.theta.push_back(Tensor(glorot_uniform(in_dim, out_dim, in_dim, out_dim, rng), true));
  l.bias = Tensor(Matrix::zeros(1, out_dim), true);
  return l;
}

std::vector<Tensor*> ChebConvLayer::parameters() {
  std::vector<Tensor*> p;
  for (Tensor& t : theta) p.push_back(&t);
  p.push_back(&bias);
  return p;
}

GatLayer GatLayer::glorot(int in_dim, int out_dim, std::mt19937_64& rng) {
  if (in_dim < 1 || out_dim < 1)
    throw std::invalid_argument("GatLayer: dims must be positive");
  GatLayer l;
  l.theta = Tensor(glorot_uniform(in_dim, out_dim, in_dim, out_dim, rng), true);
  // attention vectors map out_dim -> 1
  l.attn_src = Tensor(glorot_uniform(out_dim, 1, out_dim, 1, rng), true);
  l.attn_dst = Tensor(glorot_uniform(out_dim, 1, out_dim, 1, rng), true);
  return l;
}

std::vector<Tensor*> GatLayer::parameters() { return {&theta, &attn_src, &attn_dst}; }

GatEdges gat_edges(const PopulationGraph& g) {
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  auto offsets = std::make_shared<std::vector<int>>();
  offsets->reserve(g.n_nodes + 1);
  offsets->push_back(0);
  src->reserve(g.adj_targets.size() + g.n_nodes);
  dst->reserve(g.adj_targets.size() + g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) {
    // neighborhood plus self, sources ascending; neighbors are sorted and
    // exclude i, so insert i at its ordered position
    bool placed = false;
    for (int k = g.adj_offsets[i]; k < g.adj_offsets[i + 1]; ++k) {
      const int j = g.adj_targets[k];
      if (!placed && i < j) {
        src->push_back(i);
        dst->push_back(i);
        placed = true;
      }
      src->push_back(j);
      dst->push_back(i);
    }
    if (!placed) {
      src->push_back(i);
      dst->push_back(i);
    }
    offsets->push_back(static_cast<int>(src->size()));
  }
  GatEdges e;
  e.src = std::move(src);
  e.dst = std::move(dst);
  e.offsets = std::move(offsets);
  return e;
}

int chebconv_forward(Tape& t, int x, const ScaledLaplacian& lap, ChebConvLayer& layer) {
  const Matrix& xv = t.value(x);
  if (xv.cols != layer.in_dim())
    throw std::invalid_argument("chebconv_forward: input width " +
                                std::to_string(xv.cols) + " != layer in_dim " +
                                std::to_string(layer.in_dim()));
  if (!lap.matrix || lap.n() != xv.rows)
    throw std::invalid_argument("chebconv_forward: Laplacian size " +
                                std::to_string(lap.n()) + " != node count " +
                                std::to_string(xv.rows));
  // T_0 x = x; T_1 x = L~ x; T_k x = 2 L~ T_{k-1} x - T_{k-2} x
  int y = t.matmul(x, t.leaf(layer.theta[0]));
  int tk_prev2 = x;  // T_0 x
  int tk_prev = -1;
  for (int k = 1; k < layer.k; ++k) {
    const int tk = (k == 1)
                       ? t.spmm(lap.matrix, x)
                       : t.sub(t.scale(t.spmm(lap.matrix, tk_prev), 2.0), tk_prev2);
    y = t.add(y, t.matmul(tk, t.leaf(layer.theta[k])));
    if (k > 1) tk_prev2 = tk_prev;
    tk_prev = tk;
  }
  return t.add_row(y, t.leaf(layer.bias));
}

GatDetail gat_forward_detail(Tape& t, int x, const PopulationGraph& g, GatLayer& layer) {
  const Matrix& xv = t.value(x);
  if (xv.cols != layer.in_dim())
    throw std::invalid_argument("gat_forward: input width " + std::to_string(xv.cols) +
                                " != layer in_dim " + std::to_string(layer.in_dim()));
  if (xv.rows != g.n_nodes)
    throw std::invalid_argument("gat_forward: node count mismatch");
  GatDetail d;
  d.edges = gat_edges(g);
  const int h = t.matmul(x, t.leaf(layer.theta));
  const int s_src = t.matmul(h, t.leaf(layer.attn_src));  // n x 1, a_src . h_i
  const int s_dst = t.matmul(h, t.leaf(layer.attn_dst));  // n x 1, a_dst . h_j
  // logit per slot (i <- j): a_src.h_i + a_dst.h_j
  const int li = t.gather_rows(s_src, d.edges.dst);
  const int lj = t.gather_rows(s_dst, d.edges.src);
  const int logits = t.leaky_relu(t.add(li, lj), layer.leaky_slope);
  d.alpha = t.segment_softmax(logits, d.edges.offsets);
  const int hj = t.gather_rows(h, d.edges.src);
  const int weighted = t.row_scale(hj, d.alpha);
  d.out = t.scatter_add_rows(weighted, d.edges.dst, g.n_nodes);
  return d;
}

int gat_forward(Tape& t, int x, const PopulationGraph& g, GatLayer& layer) {
  return gat_forward_detail(t, x, g, layer).out;
}

BatchNormLayer BatchNormLayer::make(int d) {
  if (d < 1) throw std::invalid_argument("BatchNormLayer: dim must be positive");
  BatchNormLayer l;
  l.gamma = Tensor(Matrix::full(1, d, 1.0), true);
  l.beta = Tensor(Matrix::zeros(1, d), true);
  l.running_mean = Matrix::zeros(1, d);
  l.running_var = Matrix::zeros(1, d);
  return l;
}

std::vector<Tensor*> BatchNormLayer::parameters() { return {&gamma, &beta}; }

int batchnorm_forward(Tape& t, int x, BatchNormLayer& layer, bool training) {
  const Matrix& xv = t.value(x);
  if (xv.cols != layer.dim())
    throw std::invalid_argument("batchnorm_forward: width " + std::to_string(xv.cols) +
                                " != layer dim " + std::to_string(layer.dim()));
  int xhat;
  if (training) {
    if (xv.rows < 2)
      throw std::invalid_argument("batchnorm_forward: training needs >= 2 rows");
    const int mu = t.col_mean(x);
    const int xc = t.add_row(x, t.scale(mu, -1.0));
    const int var = t.col_mean(t.hadamard(xc, xc));  // population variance
    const int inv_std = t.rsqrt_shift(var, layer.epsilon);
    xhat = t.mul_row(xc, inv_std);
    // running = (1 - momentum) * running + momentum * batch
    const Matrix& muv = t.value(mu);
    const Matrix& varv = t.value(var);
    const double m = layer.momentum;
    for (int j = 0; j < layer.dim(); ++j) {
      layer.running_mean(0, j) = (1.0 - m) * layer.running_mean(0, j) + m * muv(0, j);
      layer.running_var(0, j) = (1.0 - m) * layer.running_var(0, j) + m * varv(0, j);
    }
  } else {
    Matrix neg_mean(1, layer.dim());
    Matrix inv_std(1, layer.dim());
    for (int j = 0; j < layer.dim(); ++j) {
      neg_mean(0, j) = -layer.running_mean(0, j);
      inv_std(0, j) = 1.0 / std::sqrt(layer.running_var(0, j) + layer.epsilon);
    }
    const int xc = t.add_row(x, t.constant(std::move(neg_mean), "bn_mean"));
    xhat = t.mul_row(xc, t.constant(std::move(inv_std), "bn_inv_std"));
  }
  return t.add_row(t.mul_row(xhat, t.leaf(layer.gamma)), t.leaf(layer.beta));
}

int dropout_forward(Tape& t, int x, double p, bool training, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("dropout_forward: p must be in [0, 1)");
  if (!training || p == 0.0) return x;
  const Matrix& xv = t.value(x);
  const double keep = 1.0 - p;
  const double scale = 1.0 / keep;
  Matrix mask(xv.rows, xv.cols);
  for (double& v : mask.data) v = (uniform01(rng) < keep) ? scale : 0.0;
  return t.hadamard(x, t.constant(std::move(mask), "dropout_mask"));
}

int relu_forward(Tape& t, int x) { return t.relu(x); }

int logsoftmax_forward(Tape& t, int x) { return t.log_softmax_rows(x); }

}  // namespace egcn
