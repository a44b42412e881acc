#include "egcn/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "egcn/graph.hpp"
#include "egcn/util.hpp"

namespace egcn {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (folds < 2) throw std::invalid_argument("TrainConfig: folds must be >= 2");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
  if (!(lr_base > 0.0) || !(lr_peak > 0.0))
    throw std::invalid_argument("TrainConfig: learning rates must be positive");
  if (step_up < 1 || step_down < 1)
    throw std::invalid_argument("TrainConfig: scheduler step sizes must be >= 1");
  if (!(weight_decay >= 0.0))
    throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (!(val_frac >= 0.0 && val_frac < 1.0))
    throw std::invalid_argument("TrainConfig: val_frac must be in [0, 1)");
  if (jobs < 1) throw std::invalid_argument("TrainConfig: jobs must be >= 1");
  if (hpt_profile != "paper" && hpt_profile != "plain")
    throw std::invalid_argument("TrainConfig: hpt_profile must be paper or plain");
}

TrainConfig apply_profile(TrainConfig cfg, const std::string& profile) {
  if (profile == "paper") {
    cfg.use_scheduler = true;
    cfg.momentum = 0.8;
    cfg.nesterov = true;
    cfg.weight_decay = 1.0;
  } else if (profile == "plain") {
    cfg.use_scheduler = false;
    cfg.momentum = 0.9;
    cfg.nesterov = false;
    cfg.weight_decay = 0.0;
  } else {
    throw std::invalid_argument("unknown hpt profile: " + profile);
  }
  cfg.hpt_profile = profile;
  return cfg;
}

double cyclic_lr(long long step, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("cyclic_lr: negative step");
  const double lo = std::min(cfg.lr_base, cfg.lr_peak);
  const double hi = std::max(cfg.lr_base, cfg.lr_peak);
  const long long period = static_cast<long long>(cfg.step_up) + cfg.step_down;
  const long long phase = step % period;
  if (phase < cfg.step_up)
    return lo + (hi - lo) * static_cast<double>(phase) / cfg.step_up;
  return hi - (hi - lo) * static_cast<double>(phase - cfg.step_up) / cfg.step_down;
}

void sgd_step(const std::vector<Tensor*>& params, SgdState& state, double lr,
              const TrainConfig& cfg) {
  if (state.velocity.empty()) {
    state.velocity.reserve(params.size());
    for (Tensor* p : params)
      state.velocity.push_back(Matrix::zeros(p->value.rows, p->value.cols));
  }
  if (state.velocity.size() != params.size())
    throw std::invalid_argument("sgd_step: state size != parameter count");
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    p.ensure_grad();
    Matrix& v = state.velocity[pi];
    if (!v.same_shape(p.value))
      throw std::invalid_argument("sgd_step: velocity shape mismatch at parameter " +
                                  std::to_string(pi));
    const double mu = cfg.momentum;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data[i] + cfg.weight_decay * p.value.data[i];
      v.data[i] = mu * v.data[i] + g;
      p.value.data[i] -= lr * (cfg.nesterov ? g + mu * v.data[i] : v.data[i]);
    }
  }
}

double clip_gradients(const std::vector<Tensor*>& params, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_gradients: max_norm must be > 0");
  double sumsq = 0.0;
  for (Tensor* p : params) {
    p->ensure_grad();
    for (double g : p->grad.data) sumsq += g * g;
  }
  if (!std::isfinite(sumsq)) throw NumericError("clip_gradients: non-finite gradient norm");
  const double norm = std::sqrt(sumsq);
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (Tensor* p : params)
    for (double& g : p->grad.data) g *= scale;
  return scale;
}

std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels, int k,
                                               unsigned long long seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  if (labels.empty()) throw std::invalid_argument("stratified_kfold: empty labels");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  for (const auto& [c, idx] : by_class)
    if (static_cast<int>(idx.size()) < k)
      throw std::invalid_argument("stratified_kfold: class " + std::to_string(c) +
                                  " has " + std::to_string(idx.size()) +
                                  " samples, fewer than k=" + std::to_string(k));
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> folds(k);
  for (auto& [c, idx] : by_class) {
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
      const int j = std::min(i, static_cast<int>(uniform01(rng) * (i + 1)));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t p = 0; p < idx.size(); ++p) folds[p % k].push_back(idx[p]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<FoldSplit> make_fold_splits(const std::vector<int>& labels,
                                        const TrainConfig& cfg) {
  const auto folds = stratified_kfold(labels, cfg.folds, cfg.seed);
  std::vector<FoldSplit> splits;
  splits.reserve(folds.size());
  for (int f = 0; f < static_cast<int>(folds.size()); ++f) {
    FoldSplit s;
    s.test = folds[f];
    for (int o = 0; o < static_cast<int>(folds.size()); ++o)
      if (o != f) s.train.insert(s.train.end(), folds[o].begin(), folds[o].end());
    std::sort(s.train.begin(), s.train.end());
    if (cfg.val_frac > 0.0) {
      // stratified carve-out from the training folds; odd substream indices
      // so the carve never shares a seed with a fold's model stream
      std::mt19937_64 rng(
          split_seed(cfg.seed, 2 * static_cast<unsigned long long>(f) + 1));
      std::map<int, std::vector<int>> by_class;
      for (int i : s.train) by_class[labels[i]].push_back(i);
      std::vector<int> val;
      for (auto& [c, idx] : by_class) {
        for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
          const int j = std::min(i, static_cast<int>(uniform01(rng) * (i + 1)));
          std::swap(idx[i], idx[j]);
        }
        int take = static_cast<int>(std::llround(cfg.val_frac * idx.size()));
        take = std::max(1, std::min(take, static_cast<int>(idx.size()) - 1));
        val.insert(val.end(), idx.begin(), idx.begin() + take);
      }
      std::sort(val.begin(), val.end());
      std::vector<int> train;
      std::set_difference(s.train.begin(), s.train.end(), val.begin(), val.end(),
                          std::back_inserter(train));
      s.train = std::move(train);
      s.val = std::move(val);
    } else {
      s.val = s.test;
    }
    splits.push_back(std::move(s));
  }
  return splits;
}

double subset_accuracy(const Matrix& lp, const std::vector<int>& labels,
                       const std::vector<int>& idx) {
  if (idx.empty()) throw std::invalid_argument("subset_accuracy: empty index set");
  long long correct = 0;
  for (int i : idx)
    if (argmax_row(lp, i) == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

double subset_nll(const Matrix& lp, const std::vector<int>& labels,
                  const std::vector<int>& idx) {
  double acc = 0.0;
  for (int i : idx) acc += -lp(i, labels[i]);
  return acc / static_cast<double>(idx.size());
}

namespace {

struct ModelSnapshot {
  std::vector<Matrix> values;
  Matrix running_mean, running_var;

  void capture(EgcnModel& m) {
    values.clear();
    for (Tensor* p : m.parameters()) values.push_back(p->value);
    running_mean = m.fusion_bn.running_mean;
    running_var = m.fusion_bn.running_var;
  }
  void restore(EgcnModel& m) const {
    auto params = m.parameters();
    if (params.size() != values.size())
      throw std::invalid_argument("snapshot: parameter census mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    m.fusion_bn.running_mean = running_mean;
    m.fusion_bn.running_var = running_var;
  }
};

Matrix forward_inference(Tape& t, EgcnModel& m, std::vector<Tensor>& xs,
                         const PopulationGraph& g, const ScaledLaplacian& lap) {
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (Tensor& x : xs) ids.push_back(t.leaf(x));
  std::mt19937_64 unused(0);  // inference consumes no randomness
  return t.value(egcn_forward(t, m, ids, g, lap, false, unused));
}

}  // namespace

Matrix infer_log_probs(EgcnModel& model, const MultimodalDataset& data,
                       const PopulationGraph& g, const ScaledLaplacian& lap) {
  Tape t;
  std::vector<int> ids;
  ids.reserve(data.modalities.size());
  for (const auto& [name, m] : data.modalities) ids.push_back(t.constant(m, "modality"));
  std::mt19937_64 unused(0);
  return t.value(egcn_forward(t, model, ids, g, lap, false, unused));
}

GraphBundle build_graph_bundle(const MultimodalDataset& data,
                               const std::string& lambda_max_mode) {
  GraphBundle b;
  b.graph = PopulationGraph::from_sites(data.site_labels);
  const SparseMatrix l = normalized_laplacian(b.graph);
  double lambda_max = 2.0;
  if (lambda_max_mode == "power") {
    lambda_max = power_iteration_lambda_max(l);
    if (!(lambda_max > 0.0)) lambda_max = 2.0;  // degenerate estimate; keep the bound
  } else if (lambda_max_mode != "fixed2") {
    throw std::invalid_argument("unknown lambda_max_mode: " + lambda_max_mode);
  }
  b.lap = scaled_laplacian(l, lambda_max);
  return b;
}

FoldReport train_fold(const MultimodalDataset& data, const PopulationGraph& g,
                      const ScaledLaplacian& lap, const FoldSplit& split,
                      int fold_id, const EgcnConfig& mcfg, const TrainConfig& tcfg,
                      EgcnModel* best_model) {
  tcfg.validate();
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw std::invalid_argument("train_fold: empty split component");

  const unsigned long long fold_seed =
      split_seed(tcfg.seed, 2 * static_cast<unsigned long long>(fold_id));
  std::mt19937_64 rng(fold_seed);
  EgcnModel model = build_egcn(mcfg, rng);
  auto params = model.parameters();

  // fold-local feature copies bound as no-grad leaves, so per-epoch tapes
  // reference them without copying
  std::vector<Tensor> xs;
  xs.reserve(data.modalities.size());
  for (const auto& [name, m] : data.modalities) xs.emplace_back(m, false);
  if (tcfg.standardize)
    for (Tensor& x : xs) standardize_columns(x.value, split.train);

  auto labels_sp = std::make_shared<const std::vector<int>>(data.labels);
  auto train_sp = std::make_shared<const std::vector<int>>(split.train);

  SgdState state;
  FoldReport report;
  report.fold_id = fold_id;
  report.train_indices = split.train;
  report.val_indices = split.val;
  report.test_indices = split.test;

  ModelSnapshot best;
  best.capture(model);
  double best_val = -1.0;
  int best_epoch = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = tcfg.use_scheduler ? cyclic_lr(epoch, tcfg) : tcfg.lr_peak;
    try {
      model.zero_grad();
      Tape t;
      std::vector<int> ids;
      ids.reserve(xs.size());
      for (Tensor& x : xs) ids.push_back(t.leaf(x));
      const int out = egcn_forward(t, model, ids, g, lap, true, rng);
      const int loss_id = t.nll_masked(out, labels_sp, train_sp);
      const double loss = t.value(loss_id)(0, 0);
      t.backward(loss_id);
      clip_gradients(params, tcfg.clip_norm);
      sgd_step(params, state, lr, tcfg);

      Tape ti;
      const Matrix lp = forward_inference(ti, model, xs, g, lap);
      const double val_acc = subset_accuracy(lp, data.labels, split.val);
      report.history.push_back({loss, val_acc, lr});
      if (val_acc > best_val) {
        best_val = val_acc;
        best_epoch = epoch + 1;
        best.capture(model);
      }
    } catch (const NumericError& e) {
      throw NumericError("fold " + std::to_string(fold_id) + ", epoch " +
                         std::to_string(epoch + 1) + ": " + e.what());
    }
  }

  best.restore(model);
  report.best_epoch = best_epoch;
  report.best_val_accuracy = best_val;

  Tape tf;
  const Matrix lp = forward_inference(tf, model, xs, g, lap);
  report.test_accuracy = subset_accuracy(lp, data.labels, split.test);
  report.test_nll = subset_nll(lp, data.labels, split.test);
  report.test_scores.reserve(split.test.size());
  report.test_labels.reserve(split.test.size());
  for (int i : split.test) {
    report.test_scores.push_back(std::exp(lp(i, 1)));
    report.test_labels.push_back(data.labels[i]);
  }
  report.test_auc = auc(report.test_scores, report.test_labels);
  report.roc_points = roc_curve(report.test_scores, report.test_labels);

  report.train_subject_ids.reserve(split.train.size());
  for (int i : split.train) report.train_subject_ids.push_back(data.subject_ids[i]);
  report.test_subject_ids.reserve(split.test.size());
  for (int i : split.test) report.test_subject_ids.push_back(data.subject_ids[i]);

  if (best_model) {
    EgcnModel clone = build_egcn(mcfg);
    copy_parameters(clone, model);
    *best_model = std::move(clone);
  }
  return report;
}

CvReport run_cv(const MultimodalDataset& data, const PopulationGraph& g,
                const ScaledLaplacian& lap, const EgcnConfig& mcfg,
                const TrainConfig& tcfg, std::vector<EgcnModel>* best_models) {
  data.validate();
  tcfg.validate();
  const auto splits = make_fold_splits(data.labels, tcfg);
  const int k = static_cast<int>(splits.size());

  CvReport cv;
  cv.folds.resize(k);
  if (best_models) best_models->resize(k);

  const int workers = std::max(1, std::min(tcfg.jobs, k));
  if (workers == 1) {
    for (int f = 0; f < k; ++f) {
      log_info("fold " + std::to_string(f) + ": training (" +
               std::to_string(tcfg.epochs) + " epochs)");
      cv.folds[f] = train_fold(data, g, lap, splits[f], f, mcfg, tcfg,
                               best_models ? &(*best_models)[f] : nullptr);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(k);
    auto work = [&] {
      while (true) {
        const int f = next.fetch_add(1);
        if (f >= k) return;
        try {
          cv.folds[f] = train_fold(data, g, lap, splits[f], f, mcfg, tcfg,
                                   best_models ? &(*best_models)[f] : nullptr);
        } catch (...) {
          errors[f] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    for (int f = 0; f < k; ++f)
      if (errors[f]) std::rethrow_exception(errors[f]);
  }

  auto mean_std = [&](auto getter) {
    double mean = 0.0;
    for (const FoldReport& fr : cv.folds) mean += getter(fr);
    mean /= k;
    double var = 0.0;
    for (const FoldReport& fr : cv.folds) {
      const double d = getter(fr) - mean;
      var += d * d;
    }
    return std::make_pair(mean, std::sqrt(var / k));
  };
  std::tie(cv.acc_mean, cv.acc_std) =
      mean_std([](const FoldReport& f) { return f.test_accuracy; });
  std::tie(cv.auc_mean, cv.auc_std) =
      mean_std([](const FoldReport& f) { return f.test_auc; });

  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;
  long long correct = 0, total = 0;
  for (const FoldReport& fr : cv.folds) {
    pooled_scores.insert(pooled_scores.end(), fr.test_scores.begin(),
                         fr.test_scores.end());
    pooled_labels.insert(pooled_labels.end(), fr.test_labels.begin(),
                         fr.test_labels.end());
    for (std::size_t i = 0; i < fr.test_scores.size(); ++i) {
      // binary argmax with tie -> class 0 is exactly score > 0.5
      const int pred = fr.test_scores[i] > 0.5 ? 1 : 0;
      if (pred == fr.test_labels[i]) ++correct;
      ++total;
    }
  }
  cv.pooled_acc = static_cast<double>(correct) / static_cast<double>(total);
  cv.pooled_auc = auc(pooled_scores, pooled_labels);
  return cv;
}

}  // namespace egcn
