#include "egcn/model.hpp"

#include <stdexcept>

namespace egcn {

int EgcnConfig::total_input_dim() const {
  int s = 0;
  for (int d : modality_dims) s += d;
  return s;
}

void EgcnConfig::validate() const {
  if (modality_dims.empty())
    throw std::invalid_argument("EgcnConfig: no modalities");
  for (int d : modality_dims)
    if (d < 1) throw std::invalid_argument("EgcnConfig: modality dim must be positive");
  if (hidden_dim < 1) throw std::invalid_argument("EgcnConfig: hidden_dim must be positive");
  if (n_classes < 2) throw std::invalid_argument("EgcnConfig: n_classes must be >= 2");
  if (k1 < 1 || k2 < 1 || k_head < 1)
    throw std::invalid_argument("EgcnConfig: Chebyshev orders must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw std::invalid_argument("EgcnConfig: dropout_p must be in [0, 1)");
  if (lambda_max_mode != "fixed2" && lambda_max_mode != "power")
    throw std::invalid_argument("EgcnConfig: lambda_max_mode must be fixed2 or power");
}

EgcnModel build_egcn(const EgcnConfig& config) {
  std::mt19937_64 rng(config.seed);
  return build_egcn(config, rng);
}

EgcnModel build_egcn(const EgcnConfig& config, std::mt19937_64& rng) {
  config.validate();
  EgcnModel m;
  m.config = config;
  // draw order matches named_parameters order exactly
  for (int b = 0; b < config.n_branches(); ++b) {
    Branch br;
    br.cheb1 = ChebConvLayer::glorot(config.modality_dims[b], config.hidden_dim,
                                     config.k1, rng);
    br.cheb2 = ChebConvLayer::glorot(config.hidden_dim, config.hidden_dim,
                                     config.k2, rng);
    m.branches.push_back(std::move(br));
  }
  m.fusion_bn = BatchNormLayer::make(config.fusion_dim());
  if (config.use_gat)
    m.gat = GatLayer::glorot(config.fusion_dim(), config.fusion_dim(), rng);
  m.head = ChebConvLayer::glorot(config.fusion_dim(), config.n_classes,
                                 config.k_head, rng);
  return m;
}

std::vector<std::pair<std::string, Tensor*>> EgcnModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (int b = 0; b < static_cast<int>(branches.size()); ++b) {
    const std::string prefix = "branch" + std::to_string(b);
    for (int k = 0; k < branches[b].cheb1.k; ++k)
      out.emplace_back(prefix + ".cheb1.theta" + std::to_string(k),
                       &branches[b].cheb1.theta[k]);
    out.emplace_back(prefix + ".cheb1.bias", &branches[b].cheb1.bias);
    for (int k = 0; k < branches[b].cheb2.k; ++k)
      out.emplace_back(prefix + ".cheb2.theta" + std::to_string(k),
                       &branches[b].cheb2.theta[k]);
    out.emplace_back(prefix + ".cheb2.bias", &branches[b].cheb2.bias);
  }
  out.emplace_back("fusion_bn.gamma", &fusion_bn.gamma);
  out.emplace_back("fusion_bn.beta", &fusion_bn.beta);
  if (gat) {
    out.emplace_back("gat.theta", &gat->theta);
    out.emplace_back("gat.attn_src", &gat->attn_src);
    out.emplace_back("gat.attn_dst", &gat->attn_dst);
  }
  for (int k = 0; k < head.k; ++k)
    out.emplace_back("head.theta" + std::to_string(k), &head.theta[k]);
  out.emplace_back("head.bias", &head.bias);
  return out;
}

std::vector<Tensor*> EgcnModel::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

long long EgcnModel::parameter_count() {
  long long n = 0;
  for (Tensor* t : parameters()) n += static_cast<long long>(t->value.size());
  return n;
}

void EgcnModel::zero_grad() {
  for (Tensor* t : parameters()) t->zero_grad();
}

int branch_forward(Tape& t, int x, const ScaledLaplacian& lap, Branch& branch) {
  const int h1 = t.relu(chebconv_forward(t, x, lap, branch.cheb1));
  const int h2 = t.relu(chebconv_forward(t, h1, lap, branch.cheb2));
  return t.add(h1, h2);
}

int egcn_forward(Tape& t, EgcnModel& m, const std::vector<int>& xs,
                 const PopulationGraph& g, const ScaledLaplacian& lap,
                 bool training, std::mt19937_64& rng) {
  if (static_cast<int>(xs.size()) != m.config.n_branches())
    throw std::invalid_argument("egcn_forward: expected " +
                                std::to_string(m.config.n_branches()) +
                                " modalities, got " + std::to_string(xs.size()));
  const int n = t.value(xs[0]).rows;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (t.value(xs[i]).rows != n)
      throw std::invalid_argument("egcn_forward: modality " + std::to_string(i) +
                                  " row count mismatch");
    if (t.value(xs[i]).cols != m.config.modality_dims[i])
      throw std::invalid_argument("egcn_forward: modality " + std::to_string(i) +
                                  " width " + std::to_string(t.value(xs[i]).cols) +
                                  " != configured " +
                                  std::to_string(m.config.modality_dims[i]));
  }
  if (g.n_nodes != n)
    throw std::invalid_argument("egcn_forward: graph node count mismatch");

  std::vector<int> branch_out;
  branch_out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    branch_out.push_back(branch_forward(t, xs[i], lap, m.branches[i]));

  int z = t.concat_cols(branch_out);
  z = batchnorm_forward(t, z, m.fusion_bn, training);
  z = dropout_forward(t, z, m.config.dropout_p, training, rng);
  if (m.config.use_gat) z = t.add(z, gat_forward(t, z, g, *m.gat));
  const int logits = chebconv_forward(t, z, lap, m.head);
  return t.log_softmax_rows(logits);
}

int egcn_forward(Tape& t, EgcnModel& m, const std::vector<Matrix>& xs,
                 const PopulationGraph& g, const ScaledLaplacian& lap,
                 bool training, std::mt19937_64& rng) {
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (const Matrix& x : xs) ids.push_back(t.constant(x, "modality"));
  return egcn_forward(t, m, ids, g, lap, training, rng);
}

void copy_parameters(EgcnModel& dst, EgcnModel& src) {
  auto a = dst.named_parameters();
  auto b = src.named_parameters();
  if (a.size() != b.size())
    throw std::invalid_argument("copy_parameters: parameter census mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first ||
        !a[i].second->value.same_shape(b[i].second->value))
      throw std::invalid_argument("copy_parameters: mismatch at " + a[i].first);
    a[i].second->value = b[i].second->value;
  }
  dst.fusion_bn.running_mean = src.fusion_bn.running_mean;
  dst.fusion_bn.running_var = src.fusion_bn.running_var;
}

}  // namespace egcn
