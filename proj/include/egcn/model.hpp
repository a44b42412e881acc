#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egcn/layers.hpp"

namespace egcn {

struct EgcnConfig {
  std::vector<int> modality_dims{4000, 1200, 6};
  int hidden_dim = 32;
  int n_classes = 2;
  int k1 = 2;      // first branch layer order
  int k2 = 5;      // second branch layer order
  int k_head = 2;  // classifier head order
  double dropout_p = 0.5;
  bool use_gat = true;
  unsigned long long seed = 0;
  // "fixed2" uses lambda_max = 2; "power" estimates it per graph
  std::string lambda_max_mode = "fixed2";

  int n_branches() const { return static_cast<int>(modality_dims.size()); }
  int fusion_dim() const { return hidden_dim * n_branches(); }
  int total_input_dim() const;
  void validate() const;  // throws std::invalid_argument
};

struct Branch {
  ChebConvLayer cheb1;  // d_m -> hidden
  ChebConvLayer cheb2;  // hidden -> hidden
};

struct EgcnModel {
  EgcnConfig config;
  std::vector<Branch> branches;
  BatchNormLayer fusion_bn;
  std::optional<GatLayer> gat;
  ChebConvLayer head;

  // Stable name -> tensor listing; the order defines both the parameter
  // initialization draw order and the optimizer state layout.
  std::vector<std::pair<std::string, Tensor*>> named_parameters();
  std::vector<Tensor*> parameters();
  long long parameter_count();
  void zero_grad();
};

// Glorot-seeded build; the rng overload lets callers share a stream.
EgcnModel build_egcn(const EgcnConfig& config);
EgcnModel build_egcn(const EgcnConfig& config, std::mt19937_64& rng);

// h1 = ReLU(Cheb1(x)); h2 = ReLU(Cheb2(h1)); returns h1 + h2.
int branch_forward(Tape& t, int x, const ScaledLaplacian& lap, Branch& branch);

// Full forward: branches -> concat -> batchnorm -> dropout -> optional
// residual attention -> ChebConv head -> log-softmax.  xs are tape node ids
// of the per-modality feature matrices.
int egcn_forward(Tape& t, EgcnModel& m, const std::vector<int>& xs,
                 const PopulationGraph& g, const ScaledLaplacian& lap,
                 bool training, std::mt19937_64& rng);

// Convenience: binds the modality matrices as constants on the tape.
int egcn_forward(Tape& t, EgcnModel& m, const std::vector<Matrix>& xs,
                 const PopulationGraph& g, const ScaledLaplacian& lap,
                 bool training, std::mt19937_64& rng);

// Deep copy of all parameter values and running stats from src into dst;
// shapes must already agree (same config).
void copy_parameters(EgcnModel& dst, EgcnModel& src);

}  // namespace egcn
