#pragma once

#include <memory>
#include <random>
#include <vector>

#include "egcn/graph.hpp"
#include "egcn/tape.hpp"
#include "egcn/tensor.hpp"

namespace egcn {

// Chebyshev graph convolution of order K: uses T_0 .. T_{K-1} of the scaled
// Laplacian.  y = sum_k T_k(L~) x Theta_k + bias.
struct ChebConvLayer {
  int k = 1;
  std::vector<Tensor> theta;  // k matrices, each in_dim x out_dim
  Tensor bias;                // 1 x out_dim

  int in_dim() const { return theta.empty() ? 0 : theta[0].value.rows; }
  int out_dim() const { return theta.empty() ? 0 : theta[0].value.cols; }

  static ChebConvLayer glorot(int in_dim, int out_dim, int k, std::mt19937_64& rng);
  std::vector<Tensor*> parameters();
};

// Single-head additive graph attention.  For destination i with neighbors j
// in N(i) plus itself: h = x Theta; e_ij = LeakyReLU(a_src.h_i + a_dst.h_j);
// alpha = softmax over the neighborhood; out_i = sum_j alpha_ij h_j.
struct GatLayer {
  Tensor theta;     // in_dim x out_dim
  Tensor attn_src;  // out_dim x 1
  Tensor attn_dst;  // out_dim x 1
  double leaky_slope = 0.2;

  int in_dim() const { return theta.value.rows; }
  int out_dim() const { return theta.value.cols; }

  static GatLayer glorot(int in_dim, int out_dim, std::mt19937_64& rng);
  std::vector<Tensor*> parameters();
};

// Edge slots for attention: one slot per (destination, source) pair with the
// self slot included; slots are grouped contiguously by destination node.
struct GatEdges {
  std::shared_ptr<const std::vector<int>> src;      // source node per slot
  std::shared_ptr<const std::vector<int>> dst;      // destination node per slot
  std::shared_ptr<const std::vector<int>> offsets;  // n+1 segment boundaries
};

GatEdges gat_edges(const PopulationGraph& g);

struct BatchNormLayer {
  Tensor gamma;  // 1 x d, init 1
  Tensor beta;   // 1 x d, init 0
  Matrix running_mean;  // 1 x d, init 0
  Matrix running_var;   // 1 x d, init 0
  double momentum = 0.1;
  double epsilon = 1e-5;

  int dim() const { return gamma.value.cols; }

  static BatchNormLayer make(int d);
  std::vector<Tensor*> parameters();
};

// All forwards record onto the tape and return the output node id.

int chebconv_forward(Tape& t, int x, const ScaledLaplacian& lap, ChebConvLayer& layer);

int gat_forward(Tape& t, int x, const PopulationGraph& g, GatLayer& layer);

// Variant that also exposes the attention weights node (one weight per edge
// slot of gat_edges(g)); used by tests of the softmax normalization.
struct GatDetail {
  int out = -1;
  int alpha = -1;
  GatEdges edges;
};
GatDetail gat_forward_detail(Tape& t, int x, const PopulationGraph& g, GatLayer& layer);

// Training mode normalizes by batch statistics (population variance) and
// updates running stats in place; inference normalizes by running stats.
int batchnorm_forward(Tape& t, int x, BatchNormLayer& layer, bool training);

// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
// Identity (same node id) when training is false or p == 0.
int dropout_forward(Tape& t, int x, double p, bool training, std::mt19937_64& rng);

int relu_forward(Tape& t, int x);
int logsoftmax_forward(Tape& t, int x);

// Glorot-uniform draw: limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(int rows, int cols, int fan_in, int fan_out,
                      std::mt19937_64& rng);

}  // namespace egcn
