#pragma once

#include <memory>
#include <string>
#include <vector>

#include "egcn/data.hpp"
#include "egcn/metrics.hpp"
#include "egcn/model.hpp"

namespace egcn {

struct TrainConfig {
  int epochs = 200;
  int folds = 5;
  double lr_base = 1e-7;
  double lr_peak = 1e-3;
  double momentum = 0.8;
  bool nesterov = true;
  double weight_decay = 1.0;
  double clip_norm = 2.0;
  int step_up = 500;
  int step_down = 300;
  // false: constant lr_peak every epoch (the untuned profile)
  bool use_scheduler = true;
  unsigned long long seed = 0;
  std::string hpt_profile = "paper";  // "paper" or "plain"
  // > 0 carves a stratified validation subset out of the training folds;
  // 0 evaluates validation accuracy on the held-out fold itself
  double val_frac = 0.0;
  // per-fold z-score of every feature, fitted on that fold's training rows
  bool standardize = false;
  int jobs = 1;

  void validate() const;
};

// Named hyperparameter profiles for the tuned/untuned ablation axis.
// "paper": the tuned defaults above.  "plain": constant lr 1e-3, momentum
// 0.9, no Nesterov, no weight decay; clipping kept.
TrainConfig apply_profile(TrainConfig cfg, const std::string& profile);

// Triangular cyclic schedule over lo = min(lr_base, lr_peak), hi = max:
// rises for step_up steps, falls for step_down, period step_up + step_down.
double cyclic_lr(long long step, const TrainConfig& cfg);

struct SgdState {
  std::vector<Matrix> velocity;  // one buffer per parameter, zero-initialized
};

// g = grad + weight_decay * theta; v = momentum * v + g;
// Nesterov: theta -= lr * (g + momentum * v); otherwise theta -= lr * v.
void sgd_step(const std::vector<Tensor*>& params, SgdState& state, double lr,
              const TrainConfig& cfg);

// Scales all gradients by max_norm / global_l2_norm when the norm exceeds
// max_norm; returns the applied scale (1.0 when untouched).
double clip_gradients(const std::vector<Tensor*>& params, double max_norm);

// k disjoint index sets partitioning [0, n); per-class counts across folds
// differ by at most one; deterministic under seed.
std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels, int k,
                                               unsigned long long seed);

struct EpochRecord {
  double loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

struct FoldReport {
  int fold_id = 0;
  int best_epoch = 0;  // 1-based; earliest epoch attaining the best val accuracy
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_auc = 0.0;
  double test_nll = 0.0;
  std::vector<RocPoint> roc_points;
  std::vector<EpochRecord> history;
  std::vector<int> train_indices, val_indices, test_indices;
  std::vector<std::string> train_subject_ids, test_subject_ids;
  // positive-class probabilities and labels on the test fold, for pooling
  std::vector<double> test_scores;
  std::vector<int> test_labels;
};

struct CvReport {
  std::vector<FoldReport> folds;
  double acc_mean = 0.0, acc_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  double pooled_acc = 0.0, pooled_auc = 0.0;
};

struct FoldSplit {
  std::vector<int> train, val, test;
};

// Builds the per-fold train/val/test splits from stratified_kfold; when
// val_frac > 0 the validation subset is carved out of the training folds
// (stratified, seeded), otherwise val == test.
std::vector<FoldSplit> make_fold_splits(const std::vector<int>& labels,
                                        const TrainConfig& cfg);

// Transductive training: every epoch runs one full-graph forward, loss
// masked to train indices, one optimizer step; validation accuracy after
// each epoch; parameters of the best-validation epoch are retained and used
// for the final test metrics.  best_model, when given, receives the
// retained model.
FoldReport train_fold(const MultimodalDataset& data, const PopulationGraph& g,
                      const ScaledLaplacian& lap, const FoldSplit& split,
                      int fold_id, const EgcnConfig& mcfg, const TrainConfig& tcfg,
                      EgcnModel* best_model = nullptr);

// Runs all folds (thread-parallel up to cfg.jobs) and aggregates: mean and
// population standard deviation of per-fold test accuracy/AUC, plus pooled
// metrics over the union of test folds.  best_models, when given, receives
// one retained model per fold.
CvReport run_cv(const MultimodalDataset& data, const PopulationGraph& g,
                const ScaledLaplacian& lap, const EgcnConfig& mcfg,
                const TrainConfig& tcfg,
                std::vector<EgcnModel>* best_models = nullptr);

// Inference forward returning log-probabilities; shared by training,
// evaluation, and tests.
Matrix infer_log_probs(EgcnModel& model, const MultimodalDataset& data,
                       const PopulationGraph& g, const ScaledLaplacian& lap);

// Accuracy / mean negative log-likelihood over the selected rows; the
// accumulation order follows idx so a recomputation with the same index
// sequence is bit-identical.
double subset_accuracy(const Matrix& lp, const std::vector<int>& labels,
                       const std::vector<int>& idx);
double subset_nll(const Matrix& lp, const std::vector<int>& labels,
                  const std::vector<int>& idx);

// Builds graph and scaled Laplacian from the dataset consistent with the
// model config's lambda_max_mode.
struct GraphBundle {
  PopulationGraph graph;
  ScaledLaplacian lap;
};
GraphBundle build_graph_bundle(const MultimodalDataset& data,
                               const std::string& lambda_max_mode);

}  // namespace egcn
