#include <cmath>
#include <memory>
#include <random>
#include <utility>

#include "egcn/gradcheck.hpp"
#include "egcn/layers.hpp"
#include "egcn/model.hpp"
#include "egcn/tape.hpp"
#include "egcn/util.hpp"

namespace egcn {

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  Matrix m = Matrix::zeros(r, c);
  for (double& v : m.data) v = uniform_sym(rng, 1.0);
  return m;
}

// Keeps every entry at least 0.1 away from the ReLU/LeakyReLU kink so the
// central difference never straddles it.
Matrix random_matrix_off_zero(int r, int c, std::mt19937_64& rng) {
  Matrix m = random_matrix(r, c, rng);
  for (double& v : m.data) v += (v >= 0.0 ? 0.1 : -0.1);
  return m;
}

// Entries in [0.5, 1.5]; safe domain for rsqrt under the probe step.
Matrix random_matrix_positive(int r, int c, std::mt19937_64& rng) {
  Matrix m = Matrix::zeros(r, c);
  for (double& v : m.data) v = 0.5 + uniform01(rng);
  return m;
}

std::shared_ptr<const std::vector<int>> idx_ptr(std::vector<int> v) {
  return std::make_shared<const std::vector<int>>(std::move(v));
}

// L = sum(out (*) W) with a fixed weighting W so every output element gets
// a distinct gradient path; returns the loss node id.
int weighted_loss(Tape& t, int out, const Matrix& w) {
  return t.sum_all(t.hadamard(out, t.constant(w, "weight")));
}

double run_loss(Tape& t, int loss, const Tensor& x) {
  const double v = t.value(loss)(0, 0);
  if (x.requires_grad) t.backward(loss);
  return v;
}

// Generic tape-op case: `build` maps the leaf node of x to the op output;
// the objective is the W-weighted sum of that output.
CheckCase tape_case(std::string name, Matrix x0,
                    std::function<int(Tape&, int)> build) {
  return {std::move(name), [x0 = std::move(x0), build = std::move(build)] {
            Tensor x(x0);
            Matrix w;
            {
              Tape t;
              Tensor probe(x.value);
              const int out = build(t, t.leaf(probe));
              std::mt19937_64 wrng(0xC0FFEEULL);
              w = random_matrix(t.value(out).rows, t.value(out).cols, wrng);
            }
            auto f = [&](Tensor& xt) {
              Tape t;
              const int loss = weighted_loss(t, build(t, t.leaf(xt)), w);
              return run_loss(t, loss, xt);
            };
            return grad_check(x, f);
          }};
}

// Case whose build already produces a 1x1 objective.
CheckCase scalar_case(std::string name, Matrix x0,
                      std::function<int(Tape&, int)> build) {
  return {std::move(name), [x0 = std::move(x0), build = std::move(build)] {
            Tensor x(x0);
            auto f = [&](Tensor& xt) {
              Tape t;
              const int loss = build(t, t.leaf(xt));
              return run_loss(t, loss, xt);
            };
            return grad_check(x, f);
          }};
}

PopulationGraph path_graph(int n) {
  return PopulationGraph::from_predicate(
      n, [](int i, int j) { return j == i + 1; });
}

PopulationGraph star_graph(int n) {
  return PopulationGraph::from_predicate(n, [](int i, int) { return i == 0; });
}

void add_primitive_cases(std::vector<CheckCase>& cases) {
  std::mt19937_64 rng(42);

  {
    Matrix b = random_matrix(4, 2, rng);
    cases.push_back(tape_case("tape_matmul_a", random_matrix(3, 4, rng),
                              [b](Tape& t, int x) {
                                return t.matmul(x, t.constant(b));
                              }));
  }
  {
    Matrix a = random_matrix(3, 4, rng);
    cases.push_back(tape_case("tape_matmul_b", random_matrix(4, 2, rng),
                              [a](Tape& t, int x) {
                                return t.matmul(t.constant(a), x);
                              }));
  }
  {
    PopulationGraph g = path_graph(4);
    ScaledLaplacian lap = scaled_laplacian(normalized_laplacian(g));
    cases.push_back(tape_case("tape_spmm", random_matrix(4, 3, rng),
                              [lap](Tape& t, int x) {
                                return t.spmm(lap.matrix, x);
                              }));
  }
  {
    Matrix c = random_matrix(3, 3, rng);
    cases.push_back(tape_case("tape_add_a", random_matrix(3, 3, rng),
                              [c](Tape& t, int x) { return t.add(x, t.constant(c)); }));
    cases.push_back(tape_case("tape_add_b", random_matrix(3, 3, rng),
                              [c](Tape& t, int x) { return t.add(t.constant(c), x); }));
    cases.push_back(tape_case("tape_sub_a", random_matrix(3, 3, rng),
                              [c](Tape& t, int x) { return t.sub(x, t.constant(c)); }));
    cases.push_back(tape_case("tape_sub_b", random_matrix(3, 3, rng),
                              [c](Tape& t, int x) { return t.sub(t.constant(c), x); }));
    cases.push_back(tape_case("tape_hadamard_a", random_matrix(3, 3, rng),
                              [c](Tape& t, int x) {
                                return t.hadamard(x, t.constant(c));
                              }));
    cases.push_back(tape_case("tape_hadamard_b", random_matrix(3, 3, rng),
                              [c](Tape& t, int x) {
                                return t.hadamard(t.constant(c), x);
                              }));
  }
  cases.push_back(tape_case("tape_scale", random_matrix(3, 4, rng),
                            [](Tape& t, int x) { return t.scale(x, 1.7); }));
  cases.push_back(tape_case("tape_relu", random_matrix_off_zero(3, 4, rng),
                            [](Tape& t, int x) { return t.relu(x); }));
  cases.push_back(tape_case("tape_leaky_relu", random_matrix_off_zero(3, 4, rng),
                            [](Tape& t, int x) { return t.leaky_relu(x, 0.2); }));
  {
    Matrix r = random_matrix(1, 3, rng);
    Matrix xc = random_matrix(4, 3, rng);
    cases.push_back(tape_case("tape_add_row_x", random_matrix(4, 3, rng),
                              [r](Tape& t, int x) {
                                return t.add_row(x, t.constant(r));
                              }));
    cases.push_back(tape_case("tape_add_row_r", random_matrix(1, 3, rng),
                              [xc](Tape& t, int x) {
                                return t.add_row(t.constant(xc), x);
                              }));
    cases.push_back(tape_case("tape_mul_row_x", random_matrix(4, 3, rng),
                              [r](Tape& t, int x) {
                                return t.mul_row(x, t.constant(r));
                              }));
    cases.push_back(tape_case("tape_mul_row_r", random_matrix(1, 3, rng),
                              [xc](Tape& t, int x) {
                                return t.mul_row(t.constant(xc), x);
                              }));
  }
  cases.push_back(tape_case("tape_col_mean", random_matrix(4, 3, rng),
                            [](Tape& t, int x) { return t.col_mean(x); }));
  cases.push_back(tape_case("tape_rsqrt_shift", random_matrix_positive(1, 4, rng),
                            [](Tape& t, int x) { return t.rsqrt_shift(x, 1e-5); }));
  cases.push_back(tape_case("tape_log_softmax", random_matrix(3, 4, rng),
                            [](Tape& t, int x) { return t.log_softmax_rows(x); }));
  {
    auto labels = idx_ptr({0, 2, 1, 0});
    auto mask = idx_ptr({0, 2, 3});
    cases.push_back(scalar_case("tape_nll_masked", random_matrix(4, 3, rng),
                                [labels, mask](Tape& t, int x) {
                                  return t.nll_masked(t.log_softmax_rows(x),
                                                      labels, mask);
                                }));
  }
  cases.push_back(scalar_case("tape_sum_all", random_matrix(3, 4, rng),
                              [](Tape& t, int x) { return t.sum_all(x); }));
  {
    Matrix c = random_matrix(3, 3, rng);
    cases.push_back(tape_case("tape_concat_cols", random_matrix(3, 2, rng),
                              [c](Tape& t, int x) {
                                return t.concat_cols({x, t.constant(c)});
                              }));
  }
  {
    auto idx = idx_ptr({2, 0, 1, 2, 3, 0});
    cases.push_back(tape_case("tape_gather_rows", random_matrix(4, 3, rng),
                              [idx](Tape& t, int x) {
                                return t.gather_rows(x, idx);
                              }));
  }
  {
    auto idx = idx_ptr({2, 0, 2, 1, 0});
    cases.push_back(tape_case("tape_scatter_add_rows", random_matrix(5, 3, rng),
                              [idx](Tape& t, int x) {
                                return t.scatter_add_rows(x, idx, 3);
                              }));
  }
  {
    Matrix s = random_matrix(5, 1, rng);
    Matrix xc = random_matrix(5, 3, rng);
    cases.push_back(tape_case("tape_row_scale_x", random_matrix(5, 3, rng),
                              [s](Tape& t, int x) {
                                return t.row_scale(x, t.constant(s));
                              }));
    cases.push_back(tape_case("tape_row_scale_s", random_matrix(5, 1, rng),
                              [xc](Tape& t, int x) {
                                return t.row_scale(t.constant(xc), x);
                              }));
  }
  {
    auto offsets = idx_ptr({0, 2, 5, 6});
    cases.push_back(tape_case("tape_segment_softmax", random_matrix(6, 1, rng),
                              [offsets](Tape& t, int x) {
                                return t.segment_softmax(x, offsets);
                              }));
  }
}

void add_layer_cases(std::vector<CheckCase>& cases) {
  // ChebConv on a 4-node path, order 3, 3 -> 2.
  {
    auto make = []() {
      std::mt19937_64 rng(7);
      auto layer = std::make_shared<ChebConvLayer>(
          ChebConvLayer::glorot(3, 2, 3, rng));
      PopulationGraph g = path_graph(4);
      ScaledLaplacian lap = scaled_laplacian(normalized_laplacian(g));
      return std::make_pair(layer, lap);
    };
    cases.push_back({"chebconv_input", [make] {
                       auto [layer, lap] = make();
                       std::mt19937_64 rng(11);
                       Tensor x(random_matrix(4, 3, rng));
                       Matrix w = random_matrix(4, 2, rng);
                       auto f = [&](Tensor& xt) {
                         Tape t;
                         const int out =
                             chebconv_forward(t, t.leaf(xt), lap, *layer);
                         return run_loss(t, weighted_loss(t, out, w), xt);
                       };
                       return grad_check(x, f);
                     }});
    auto param_case = [make](std::string name, int which) {
      return CheckCase{std::move(name), [make, which] {
                         auto [layer, lap] = make();
                         std::mt19937_64 rng(11);
                         Matrix x0 = random_matrix(4, 3, rng);
                         Matrix w = random_matrix(4, 2, rng);
                         Tensor* target = layer->parameters()[which];
                         auto f = [&](Tensor& xt) {
                           Tape t;
                           const int out = chebconv_forward(
                               t, t.constant(x0), lap, *layer);
                           return run_loss(t, weighted_loss(t, out, w), xt);
                         };
                         return grad_check(*target, f);
                       }};
    };
    cases.push_back(param_case("chebconv_theta0", 0));
    cases.push_back(param_case("chebconv_theta1", 1));
    cases.push_back(param_case("chebconv_theta2", 2));
    cases.push_back(param_case("chebconv_bias", 3));
  }

  // GAT on a 4-node star, 3 -> 2.
  {
    auto make = []() {
      std::mt19937_64 rng(13);
      auto layer = std::make_shared<GatLayer>(GatLayer::glorot(3, 2, rng));
      return std::make_pair(layer, star_graph(4));
    };
    cases.push_back({"gat_input", [make] {
                       auto [layer, g] = make();
                       std::mt19937_64 rng(17);
                       Tensor x(random_matrix(4, 3, rng));
                       Matrix w = random_matrix(4, 2, rng);
                       auto f = [&](Tensor& xt) {
                         Tape t;
                         const int out = gat_forward(t, t.leaf(xt), g, *layer);
                         return run_loss(t, weighted_loss(t, out, w), xt);
                       };
                       return grad_check(x, f);
                     }});
    auto param_case = [make](std::string name, int which) {
      return CheckCase{std::move(name), [make, which] {
                         auto [layer, g] = make();
                         std::mt19937_64 rng(17);
                         Matrix x0 = random_matrix(4, 3, rng);
                         Matrix w = random_matrix(4, 2, rng);
                         Tensor* target = layer->parameters()[which];
                         auto f = [&](Tensor& xt) {
                           Tape t;
                           const int out =
                               gat_forward(t, t.constant(x0), g, *layer);
                           return run_loss(t, weighted_loss(t, out, w), xt);
                         };
                         return grad_check(*target, f);
                       }};
    };
    cases.push_back(param_case("gat_theta", 0));
    cases.push_back(param_case("gat_attn_src", 1));
    cases.push_back(param_case("gat_attn_dst", 2));
  }

  // BatchNorm, training mode, 5 x 3.
  {
    auto make = []() { return std::make_shared<BatchNormLayer>(BatchNormLayer::make(3)); };
    cases.push_back({"batchnorm_input", [make] {
                       auto layer = make();
                       std::mt19937_64 rng(19);
                       Tensor x(random_matrix(5, 3, rng));
                       Matrix w = random_matrix(5, 3, rng);
                       auto f = [&](Tensor& xt) {
                         Tape t;
                         const int out =
                             batchnorm_forward(t, t.leaf(xt), *layer, true);
                         return run_loss(t, weighted_loss(t, out, w), xt);
                       };
                       return grad_check(x, f);
                     }});
    auto param_case = [make](std::string name, int which) {
      return CheckCase{std::move(name), [make, which] {
                         auto layer = make();
                         std::mt19937_64 rng(19);
                         Matrix x0 = random_matrix(5, 3, rng);
                         Matrix w = random_matrix(5, 3, rng);
                         // nonzero gamma/beta so the objective depends on both
                         std::mt19937_64 prng(23);
                         layer->gamma.value = random_matrix_positive(1, 3, prng);
                         layer->beta.value = random_matrix(1, 3, prng);
                         Tensor* target = layer->parameters()[which];
                         auto f = [&](Tensor& xt) {
                           Tape t;
                           const int out = batchnorm_forward(
                               t, t.constant(x0), *layer, true);
                           return run_loss(t, weighted_loss(t, out, w), xt);
                         };
                         return grad_check(*target, f);
                       }};
    };
    cases.push_back(param_case("batchnorm_gamma", 0));
    cases.push_back(param_case("batchnorm_beta", 1));
  }

  // Dropout with the mask rng reseeded per evaluation: the mask is part of
  // the objective, not noise.
  cases.push_back({"dropout_input", [] {
                     std::mt19937_64 rng(29);
                     Tensor x(random_matrix(5, 4, rng));
                     Matrix w = random_matrix(5, 4, rng);
                     auto f = [&](Tensor& xt) {
                       Tape t;
                       std::mt19937_64 mask_rng(123);
                       const int out =
                           dropout_forward(t, t.leaf(xt), 0.4, true, mask_rng);
                       return run_loss(t, weighted_loss(t, out, w), xt);
                     };
                     return grad_check(x, f);
                   }});

  // Two stacked ChebConv layers with the residual add.
  cases.push_back({"branch_input", [] {
                     std::mt19937_64 rng(31);
                     Branch branch;
                     branch.cheb1 = ChebConvLayer::glorot(3, 4, 2, rng);
                     branch.cheb2 = ChebConvLayer::glorot(4, 4, 3, rng);
                     PopulationGraph g = path_graph(4);
                     ScaledLaplacian lap =
                         scaled_laplacian(normalized_laplacian(g));
                     std::mt19937_64 xrng(37);
                     Tensor x(random_matrix(4, 3, xrng));
                     Matrix w = random_matrix(4, 4, xrng);
                     auto f = [&](Tensor& xt) {
                       Tape t;
                       const int out =
                           branch_forward(t, t.leaf(xt), lap, branch);
                       return run_loss(t, weighted_loss(t, out, w), xt);
                     };
                     return grad_check(x, f);
                   }});
}

// Toy full-model fixture: 6 nodes, three modalities (8/5/3 features),
// hidden width 4, attention on, one isolated node via a singleton site.
struct ToyModel {
  std::shared_ptr<EgcnModel> model;
  PopulationGraph graph;
  ScaledLaplacian lap;
  std::vector<Matrix> xs;
  std::shared_ptr<const std::vector<int>> labels, mask;
};

ToyModel make_toy_model() {
  ToyModel toy;
  EgcnConfig cfg;
  cfg.modality_dims = {8, 5, 3};
  cfg.hidden_dim = 4;
  cfg.k1 = 2;
  cfg.k2 = 5;
  cfg.k_head = 2;
  cfg.dropout_p = 0.5;
  cfg.use_gat = true;
  cfg.seed = 97;
  toy.model = std::make_shared<EgcnModel>(build_egcn(cfg));
  toy.graph = PopulationGraph::from_sites({"A", "A", "B", "B", "B", "C"});
  toy.lap = scaled_laplacian(normalized_laplacian(toy.graph));
  std::mt19937_64 rng(101);
  for (int d : cfg.modality_dims) toy.xs.push_back(random_matrix(6, d, rng));
  toy.labels = idx_ptr({0, 1, 0, 1, 1, 0});
  toy.mask = idx_ptr({0, 1, 2, 3});
  return toy;
}

// Masked NLL of the full model in training mode; the dropout rng is
// reseeded per call so repeated evaluations share the mask.
int toy_loss(Tape& t, ToyModel& toy, Tensor* input_mod0) {
  std::vector<int> xs;
  for (std::size_t m = 0; m < toy.xs.size(); ++m)
    xs.push_back(m == 0 && input_mod0 ? t.leaf(*input_mod0)
                                      : t.constant(toy.xs[m]));
  std::mt19937_64 rng(777);
  const int out =
      egcn_forward(t, *toy.model, xs, toy.graph, toy.lap, true, rng);
  return t.nll_masked(out, toy.labels, toy.mask);
}

void add_model_cases(std::vector<CheckCase>& cases) {
  cases.push_back({"model_input_mod0", [] {
                     ToyModel toy = make_toy_model();
                     Tensor x(toy.xs[0]);
                     auto f = [&](Tensor& xt) {
                       Tape t;
                       return run_loss(t, toy_loss(t, toy, &xt), xt);
                     };
                     return grad_check(x, f);
                   }});
  const std::size_t n_params = make_toy_model().model->named_parameters().size();
  for (std::size_t p = 0; p < n_params; ++p) {
    ToyModel probe = make_toy_model();
    std::string name = "model." + probe.model->named_parameters()[p].first;
    cases.push_back({std::move(name), [p] {
                       ToyModel toy = make_toy_model();
                       Tensor* target = toy.model->named_parameters()[p].second;
                       auto f = [&](Tensor& xt) {
                         Tape t;
                         return run_loss(t, toy_loss(t, toy, nullptr), xt);
                       };
                       return grad_check(*target, f);
                     }});
  }
}

std::vector<CheckCase> build_cases() {
  std::vector<CheckCase> cases;
  add_primitive_cases(cases);
  add_layer_cases(cases);
  add_model_cases(cases);
  return cases;
}

}  // namespace

const std::vector<CheckCase>& gradcheck_cases() {
  static const std::vector<CheckCase> cases = build_cases();
  return cases;
}

}  // namespace egcn
