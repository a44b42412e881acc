#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "egcn/kernels.hpp"
#include "egcn/layers.hpp"
#include "egcn/model.hpp"
#include "egcn/util.hpp"
#include "oracles.hpp"

using namespace egcn;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& g, double limit = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = uniform_sym(g, limit);
  return m;
}

PopulationGraph path_graph(int n) {
  return PopulationGraph::from_predicate(n, [](int i, int j) { return j == i + 1; });
}

ScaledLaplacian lap_of(const PopulationGraph& g) {
  return scaled_laplacian(normalized_laplacian(g));
}

Matrix cheb_value(Matrix x, const ScaledLaplacian& lap, ChebConvLayer& layer) {
  Tape t;
  return t.value(chebconv_forward(t, t.constant(std::move(x)), lap, layer));
}

// plain triple loop, independent of the library kernels
Matrix dense_mm(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k)
      for (int j = 0; j < b.cols; ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

std::vector<Matrix> theta_values(const ChebConvLayer& layer) {
  std::vector<Matrix> out;
  for (const Tensor& th : layer.theta) out.push_back(th.value);
  return out;
}

}  // namespace

TEST_CASE("order-1 filters ignore the graph") {
  std::mt19937_64 rng(3);
  ChebConvLayer layer = ChebConvLayer::glorot(3, 2, 1, rng);
  Matrix x = random_matrix(5, 3, rng);
  Matrix on_path = cheb_value(x, lap_of(path_graph(5)), layer);
  Matrix on_clique =
      cheb_value(x, lap_of(PopulationGraph::from_sites({"A", "A", "A", "A", "A"})), layer);
  CHECK(on_path == on_clique);
  Matrix direct = kernels::matmul_nn(x, layer.theta[0].value);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(on_path(i, j) == direct(i, j) + layer.bias.value(0, j));
}

TEST_CASE("edgeless order-2 filter with identity weights is the identity") {
  std::mt19937_64 rng(5);
  ChebConvLayer layer = ChebConvLayer::glorot(3, 3, 2, rng);
  layer.theta[0].value = Matrix::identity(3);
  layer.bias.value.fill(0.0);
  PopulationGraph edgeless = PopulationGraph::from_sites({"A", "B", "C", "D"});
  Matrix x = random_matrix(4, 3, rng);
  // scaled laplacian of the edgeless graph is all zero, so the T1 term vanishes
  CHECK(lap_of(edgeless).matrix->nnz() == 0);
  CHECK(cheb_value(x, lap_of(edgeless), layer) == x);
}

TEST_CASE("path-graph filter matches the spectral-domain oracle") {
  std::mt19937_64 rng(7);
  ChebConvLayer layer = ChebConvLayer::glorot(3, 2, 3, rng);
  PopulationGraph g = path_graph(3);
  ScaledLaplacian lap = lap_of(g);
  Matrix x = random_matrix(3, 3, rng);
  Matrix want = oracle::spectral_chebconv(lap.matrix->to_dense(), x,
                                          theta_values(layer), layer.bias.value);
  CHECK(max_abs_diff(cheb_value(x, lap, layer), want) <= 1e-8);
}

TEST_CASE("random graphs match the spectral-domain oracle") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 2 + static_cast<int>(rng() % 11);
    std::vector<std::string> sites(n);
    for (int i = 0; i < n; ++i) sites[i] = std::string(1, char('A' + rng() % 3));
    PopulationGraph g = PopulationGraph::from_sites(sites);
    ScaledLaplacian lap = lap_of(g);
    for (int k : {1, 2, 5}) {
      ChebConvLayer layer = ChebConvLayer::glorot(3, 2, k, rng);
      Matrix x = random_matrix(n, 3, rng);
      Matrix want = oracle::spectral_chebconv(lap.matrix->to_dense(), x,
                                              theta_values(layer), layer.bias.value);
      CHECK(max_abs_diff(cheb_value(x, lap, layer), want) <= 1e-8);
    }
  }
}

TEST_CASE("filter support is exactly K-1 hops") {
  std::mt19937_64 rng(13);
  PopulationGraph g = path_graph(10);
  ScaledLaplacian lap = lap_of(g);
  ChebConvLayer layer = ChebConvLayer::glorot(3, 3, 5, rng);
  Matrix x = random_matrix(10, 3, rng);
  Matrix x2 = x;
  for (int j = 0; j < 3; ++j) x2(9, j) += 0.37;
  Matrix y1 = cheb_value(x, lap, layer);
  Matrix y2 = cheb_value(x2, lap, layer);
  // nodes 0..4 are more than 4 hops from node 9: identical to the bit
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(y1(i, j) == y2(i, j));
  bool changed = false;
  for (int j = 0; j < 3; ++j) changed = changed || y1(5, j) != y2(5, j);
  CHECK(changed);
}

TEST_CASE("two-layer branch widens the receptive field additively") {
  std::mt19937_64 rng(17);
  Branch branch;
  branch.cheb1 = ChebConvLayer::glorot(3, 4, 2, rng);
  branch.cheb2 = ChebConvLayer::glorot(4, 4, 5, rng);
  PopulationGraph g = path_graph(10);
  ScaledLaplacian lap = lap_of(g);
  Matrix x = random_matrix(10, 3, rng);
  Matrix x2 = x;
  for (int j = 0; j < 3; ++j) x2(9, j) += 0.41;
  Tape t1, t2;
  Matrix y1 = t1.value(branch_forward(t1, t1.constant(x), lap, branch));
  Matrix y2 = t2.value(branch_forward(t2, t2.constant(x2), lap, branch));
  // receptive field (k1-1)+(k2-1) = 5 hops; nodes 0..3 sit beyond it
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(y1(i, j) == y2(i, j));
  bool changed = false;
  for (int j = 0; j < 4; ++j) changed = changed || y1(4, j) != y2(4, j);
  CHECK(changed);
}

TEST_CASE("branch residual degenerate cases") {
  std::mt19937_64 rng(19);
  Branch branch;
  branch.cheb1 = ChebConvLayer::glorot(3, 4, 2, rng);
  branch.cheb2 = ChebConvLayer::glorot(4, 4, 3, rng);
  PopulationGraph g = path_graph(6);
  ScaledLaplacian lap = lap_of(g);

  Branch zero_bias = branch;
  zero_bias.cheb1.bias.value.fill(0.0);
  zero_bias.cheb2.bias.value.fill(0.0);
  Tape t;
  Matrix y = t.value(branch_forward(t, t.constant(Matrix::zeros(6, 3)), lap, zero_bias));
  CHECK(y == Matrix::zeros(6, 4));

  Branch dead_second = branch;
  for (Tensor& th : dead_second.cheb2.theta) th.value.fill(0.0);
  dead_second.cheb2.bias.value.fill(0.0);
  Matrix x = random_matrix(6, 3, rng);
  Tape t2;
  Matrix out = t2.value(branch_forward(t2, t2.constant(x), lap, dead_second));
  Tape t3;
  Matrix h1 = t3.value(relu_forward(t3, chebconv_forward(t3, t3.constant(x), lap,
                                                         dead_second.cheb1)));
  CHECK(out == h1);
}

TEST_CASE("branch matches a straight-line dense recurrence") {
  std::mt19937_64 rng(23);
  Branch branch;
  branch.cheb1 = ChebConvLayer::glorot(3, 4, 2, rng);
  branch.cheb2 = ChebConvLayer::glorot(4, 4, 5, rng);
  PopulationGraph g = PopulationGraph::from_sites({"A", "A", "B", "B", "B", "C"});
  ScaledLaplacian lap = lap_of(g);
  Matrix x = random_matrix(6, 3, rng);

  auto dense_cheb = [&](const Matrix& in, ChebConvLayer& layer) {
    Matrix lt = lap.matrix->to_dense();
    Matrix tk_prev, tk = in;
    Matrix acc(in.rows, layer.out_dim());
    for (int k = 0; k < layer.k; ++k) {
      if (k == 1) {
        tk_prev = tk;
        tk = dense_mm(lt, in);
      } else if (k > 1) {
        Matrix next = kernels::sub(kernels::scale(dense_mm(lt, tk), 2.0), tk_prev);
        tk_prev = tk;
        tk = next;
      }
      acc = kernels::add(acc, dense_mm(tk, layer.theta[k].value));
    }
    for (int i = 0; i < acc.rows; ++i)
      for (int j = 0; j < acc.cols; ++j) acc(i, j) += layer.bias.value(0, j);
    return acc;
  };
  Matrix h1 = kernels::relu(dense_cheb(x, branch.cheb1));
  Matrix h2 = kernels::relu(dense_cheb(h1, branch.cheb2));
  Matrix want = kernels::add(h1, h2);

  Tape t;
  Matrix got = t.value(branch_forward(t, t.constant(x), lap, branch));
  CHECK(max_abs_diff(got, want) <= 1e-10);
}

TEST_CASE("attention edge slots are grouped by destination") {
  GatEdges e = gat_edges(PopulationGraph::from_sites({"A", "A", "B"}));
  CHECK(*e.offsets == std::vector<int>{0, 2, 4, 5});
  CHECK(*e.src == std::vector<int>{0, 1, 0, 1, 2});
  CHECK(*e.dst == std::vector<int>{0, 0, 1, 1, 2});
}

TEST_CASE("isolated nodes attend only to themselves") {
  std::mt19937_64 rng(29);
  GatLayer layer = GatLayer::glorot(4, 3, rng);
  PopulationGraph g = PopulationGraph::from_sites({"A", "A", "B"});
  Matrix x = random_matrix(3, 4, rng);
  Tape t;
  GatDetail d = gat_forward_detail(t, t.constant(x), g, layer);
  const Matrix& alpha = t.value(d.alpha);
  CHECK(alpha(4, 0) == 1.0);  // singleton softmax
  Matrix h = kernels::matmul_nn(x, layer.theta.value);
  const Matrix& out = t.value(d.out);
  for (int j = 0; j < 3; ++j) CHECK(out(2, j) == h(2, j));
}

TEST_CASE("identical neighbors split attention evenly") {
  std::mt19937_64 rng(31);
  GatLayer layer = GatLayer::glorot(4, 3, rng);
  PopulationGraph g = PopulationGraph::from_sites({"S", "S"});
  Matrix x(2, 4);
  for (int j = 0; j < 4; ++j) {
    double v = uniform_sym(rng, 1.0);
    x(0, j) = v;
    x(1, j) = v;
  }
  Tape t;
  GatDetail d = gat_forward_detail(t, t.constant(x), g, layer);
  const Matrix& alpha = t.value(d.alpha);
  for (int e = 0; e < 4; ++e) CHECK(alpha(e, 0) == 0.5);
  Matrix h = kernels::matmul_nn(x, layer.theta.value);
  CHECK(t.value(d.out) == h);  // h/2 + h/2 with equal rows
}

TEST_CASE("attention matches the dense masked oracle") {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + static_cast<int>(rng() % 14);
    std::vector<std::string> sites(n);
    for (int i = 0; i < n; ++i) sites[i] = std::string(1, char('A' + rng() % 5));
    PopulationGraph g = PopulationGraph::from_sites(sites);
    GatLayer layer = GatLayer::glorot(3, 4, rng);
    Matrix x = random_matrix(n, 3, rng);
    Tape t;
    GatDetail d = gat_forward_detail(t, t.constant(x), g, layer);
    Matrix want = oracle::dense_gat(x, g, layer.theta.value, layer.attn_src.value,
                                    layer.attn_dst.value, layer.leaky_slope);
    CHECK(max_abs_diff(t.value(d.out), want) <= 1e-10);

    const Matrix& alpha = t.value(d.alpha);
    const std::vector<int>& offsets = *d.edges.offsets;
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      double sum = 0.0;
      for (int e = offsets[s]; e < offsets[s + 1]; ++e) {
        CHECK(alpha(e, 0) >= 0.0);
        sum += alpha(e, 0);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("batchnorm training normalizes columns") {
  std::mt19937_64 rng(41);
  BatchNormLayer bn = BatchNormLayer::make(3);
  // variance well above epsilon so the epsilon bias stays under the bound
  Matrix x = random_matrix(8, 3, rng, 20.0);
  Tape t;
  Matrix y = t.value(batchnorm_forward(t, t.constant(x), bn, true));
  for (int j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (int i = 0; i < 8; ++i) mean += y(i, j);
    mean /= 8.0;
    CHECK(std::abs(mean) <= 1e-10);
    double var = 0.0;
    for (int i = 0; i < 8; ++i) var += (y(i, j) - mean) * (y(i, j) - mean);
    var /= 8.0;  // population variance
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("constant columns come out as beta") {
  std::mt19937_64 rng(43);
  BatchNormLayer bn = BatchNormLayer::make(2);
  bn.gamma.value(0, 0) = 1.7;
  bn.beta.value(0, 0) = -0.9;
  Matrix x(5, 2);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = 3.7;
    x(i, 1) = uniform_sym(rng, 2.0);
  }
  Tape t;
  Matrix y = t.value(batchnorm_forward(t, t.constant(x), bn, true));
  for (int i = 0; i < 5; ++i) CHECK(y(i, 0) == -0.9);
}

TEST_CASE("one training step moves running stats by the momentum fraction") {
  std::mt19937_64 rng(47);
  BatchNormLayer bn = BatchNormLayer::make(3);
  CHECK(bn.running_mean == Matrix::zeros(1, 3));
  Matrix x = random_matrix(6, 3, rng);
  Tape t;
  batchnorm_forward(t, t.constant(x), bn, true);
  for (int j = 0; j < 3; ++j) {
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < 6; ++i) mean += x(i, j);
    mean /= 6.0;
    for (int i = 0; i < 6; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= 6.0;
    CHECK(bn.running_mean(0, j) == doctest::Approx(0.1 * mean).epsilon(1e-14));
    CHECK(bn.running_var(0, j) == doctest::Approx(0.1 * var).epsilon(1e-14));
  }
}

TEST_CASE("inference normalizes with running stats and leaves them untouched") {
  BatchNormLayer bn = BatchNormLayer::make(2);
  bn.running_mean = Matrix::from_rows({{1.0, -2.0}});
  bn.running_var = Matrix::from_rows({{4.0, 9.0}});
  bn.gamma.value = Matrix::from_rows({{2.0, 0.5}});
  bn.beta.value = Matrix::from_rows({{0.1, -0.3}});
  Matrix x = Matrix::from_rows({{3.0, 1.0}, {-1.0, -5.0}});
  Tape t;
  Matrix y = t.value(batchnorm_forward(t, t.constant(x), bn, false));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double inv = 1.0 / std::sqrt(bn.running_var(0, j) + bn.epsilon);
      double want = (x(i, j) + -bn.running_mean(0, j)) * inv * bn.gamma.value(0, j) +
                    bn.beta.value(0, j);
      CHECK(y(i, j) == want);
    }
  CHECK(bn.running_mean == Matrix::from_rows({{1.0, -2.0}}));
  CHECK(bn.running_var == Matrix::from_rows({{4.0, 9.0}}));
}

TEST_CASE("batchnorm training needs at least two rows") {
  BatchNormLayer bn = BatchNormLayer::make(2);
  Tape t;
  CHECK_THROWS_AS(batchnorm_forward(t, t.constant(Matrix(1, 2, 1.0)), bn, true),
                  std::invalid_argument);
}

TEST_CASE("dropout identity modes") {
  std::mt19937_64 rng(53);
  Tape t;
  int x = t.constant(Matrix(3, 3, 1.0));
  CHECK(dropout_forward(t, x, 0.0, true, rng) == x);
  CHECK(dropout_forward(t, x, 0.5, false, rng) == x);
  CHECK_THROWS_AS(dropout_forward(t, x, 1.0, true, rng), std::invalid_argument);
}

TEST_CASE("dropout keeps the mean and doubles survivors at half rate") {
  std::mt19937_64 rng(59);
  Tape t;
  int y = dropout_forward(t, t.constant(Matrix(1000, 100, 1.0)), 0.5, true, rng);
  const Matrix& yv = t.value(y);
  double mean = 0.0;
  for (double v : yv.data) {
    CHECK((v == 0.0 || v == 2.0));
    mean += v;
  }
  mean /= static_cast<double>(yv.size());
  // sigma of the sample mean is 1/sqrt(1e5)
  CHECK(std::abs(mean - 1.0) <= 3.0 / std::sqrt(1e5));
}

TEST_CASE("dropout masks are seed-deterministic") {
  Tape t;
  int x = t.constant(Matrix(10, 10, 1.0));
  std::mt19937_64 a(7), b(7), c(8);
  Matrix ya = t.value(dropout_forward(t, x, 0.4, true, a));
  Matrix yb = t.value(dropout_forward(t, x, 0.4, true, b));
  Matrix yc = t.value(dropout_forward(t, x, 0.4, true, c));
  CHECK(ya == yb);
  CHECK(ya != yc);
}

TEST_CASE("activation forwards on the tape") {
  Tape t;
  Matrix y = t.value(relu_forward(t, t.constant(Matrix::from_rows({{-1, 0, 2}}))));
  CHECK(y == Matrix::from_rows({{0, 0, 2}}));
  Matrix z = t.value(logsoftmax_forward(t, t.constant(Matrix::from_rows({{0, 0}}))));
  CHECK(z(0, 0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("glorot draws respect the limit and the seed") {
  std::mt19937_64 a(61), b(61);
  double limit = std::sqrt(6.0 / (7 + 5));
  Matrix m1 = glorot_uniform(7, 5, 7, 5, a);
  Matrix m2 = glorot_uniform(7, 5, 7, 5, b);
  CHECK(m1 == m2);
  for (double v : m1.data) CHECK(std::abs(v) <= limit);
}
