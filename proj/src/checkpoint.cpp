#include "egcn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace egcn {

namespace {

constexpr int kFormatVersion = 1;

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json j;
  j["shape"] = {m.rows, m.cols};
  j["values"] = m.data;
  return j;
}

Matrix matrix_from_json(const ordered_json& j, const std::string& name) {
  if (!j.contains("shape") || !j.contains("values"))
    throw std::invalid_argument("checkpoint: " + name + " missing shape/values");
  const auto& shape = j.at("shape");
  if (shape.size() != 2)
    throw std::invalid_argument("checkpoint: " + name + " shape must be [rows, cols]");
  Matrix m(shape[0].get<int>(), shape[1].get<int>());
  const auto& vals = j.at("values");
  if (vals.size() != m.size())
    throw std::invalid_argument("checkpoint: " + name + " has " +
                                std::to_string(vals.size()) + " values, shape needs " +
                                std::to_string(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = vals[i].get<double>();
  return m;
}

}  // namespace

ordered_json config_to_json(const EgcnConfig& c) {
  ordered_json j;
  j["modality_dims"] = c.modality_dims;
  j["hidden_dim"] = c.hidden_dim;
  j["n_classes"] = c.n_classes;
  j["k1"] = c.k1;
  j["k2"] = c.k2;
  j["k_head"] = c.k_head;
  j["dropout_p"] = c.dropout_p;
  j["use_gat"] = c.use_gat;
  j["seed"] = c.seed;
  j["lambda_max_mode"] = c.lambda_max_mode;
  return j;
}

EgcnConfig config_from_json(const ordered_json& j) {
  EgcnConfig c;
  c.modality_dims = j.at("modality_dims").get<std::vector<int>>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.k1 = j.at("k1").get<int>();
  c.k2 = j.at("k2").get<int>();
  c.k_head = j.at("k_head").get<int>();
  c.dropout_p = j.at("dropout_p").get<double>();
  c.use_gat = j.at("use_gat").get<bool>();
  c.seed = j.at("seed").get<unsigned long long>();
  c.lambda_max_mode = j.at("lambda_max_mode").get<std::string>();
  c.validate();
  return c;
}

ordered_json checkpoint_to_json(EgcnModel& m) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config_to_json(m.config);
  ordered_json params;
  for (auto& [name, t] : m.named_parameters()) params[name] = matrix_to_json(t->value);
  j["parameters"] = std::move(params);
  ordered_json stats;
  stats["fusion_bn.running_mean"] = matrix_to_json(m.fusion_bn.running_mean);
  stats["fusion_bn.running_var"] = matrix_to_json(m.fusion_bn.running_var);
  j["running_stats"] = std::move(stats);
  return j;
}

EgcnModel checkpoint_from_json(const ordered_json& j) {
  if (!j.contains("format_version"))
    throw std::invalid_argument("checkpoint: missing format_version");
  const int v = j.at("format_version").get<int>();
  if (v != kFormatVersion)
    throw std::invalid_argument("checkpoint: unsupported format_version " +
                                std::to_string(v) + ", expected " +
                                std::to_string(kFormatVersion));
  EgcnModel m = build_egcn(config_from_json(j.at("config")));
  const auto& params = j.at("parameters");
  auto named = m.named_parameters();
  if (params.size() != named.size())
    throw std::invalid_argument("checkpoint: has " + std::to_string(params.size()) +
                                " parameters, config implies " +
                                std::to_string(named.size()));
  for (auto& [name, t] : named) {
    if (!params.contains(name))
      throw std::invalid_argument("checkpoint: missing parameter " + name);
    Matrix loaded = matrix_from_json(params.at(name), name);
    if (!loaded.same_shape(t->value))
      throw std::invalid_argument("checkpoint: parameter " + name + " has shape " +
                                  loaded.shape_str() + ", layer expects " +
                                  t->value.shape_str());
    t->value = std::move(loaded);
  }
  const auto& stats = j.at("running_stats");
  Matrix rm = matrix_from_json(stats.at("fusion_bn.running_mean"), "fusion_bn.running_mean");
  Matrix rv = matrix_from_json(stats.at("fusion_bn.running_var"), "fusion_bn.running_var");
  if (!rm.same_shape(m.fusion_bn.running_mean) || !rv.same_shape(m.fusion_bn.running_var))
    throw std::invalid_argument("checkpoint: running stats shape mismatch for fusion_bn");
  m.fusion_bn.running_mean = std::move(rm);
  m.fusion_bn.running_var = std::move(rv);
  return m;
}

void save_checkpoint(const std::string& path, EgcnModel& m, const ordered_json& eval) {
  ordered_json j = checkpoint_to_json(m);
  if (!eval.is_null()) j["eval"] = eval;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " + e.what());
  }
  LoadedCheckpoint lc{checkpoint_from_json(j),
                      j.contains("eval") ? j.at("eval") : ordered_json(nullptr)};
  return lc;
}

}  // namespace egcn
