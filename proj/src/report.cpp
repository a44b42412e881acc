#include "egcn/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace egcn {

const char* artifact_version() { return "1.0.0"; }

namespace {

// +inf thresholds (the ROC sentinel) have no JSON literal; they serialize
// as null, deterministically.
ordered_json roc_to_json(const std::vector<RocPoint>& points) {
  ordered_json arr = ordered_json::array();
  for (const RocPoint& p : points) {
    ordered_json jp;
    if (std::isinf(p.threshold))
      jp["threshold"] = nullptr;
    else
      jp["threshold"] = p.threshold;
    jp["fpr"] = p.fpr;
    jp["tpr"] = p.tpr;
    arr.push_back(std::move(jp));
  }
  return arr;
}

}  // namespace

ordered_json manifest_to_json(const RunManifest& m, bool include_timestamps) {
  ordered_json j;
  j["tool"] = m.tool;
  j["artifact_version"] = m.artifact_version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  ordered_json inputs;
  for (const auto& [name, digest] : m.inputs) inputs[name] = digest;
  j["inputs"] = std::move(inputs);
  j["resolved_config"] = m.resolved_config;
  if (include_timestamps) {
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
  }
  return j;
}

ordered_json train_config_to_json(const TrainConfig& c) {
  ordered_json j;
  j["epochs"] = c.epochs;
  j["folds"] = c.folds;
  j["lr_base"] = c.lr_base;
  j["lr_peak"] = c.lr_peak;
  j["momentum"] = c.momentum;
  j["nesterov"] = c.nesterov;
  j["weight_decay"] = c.weight_decay;
  j["clip_norm"] = c.clip_norm;
  j["step_up"] = c.step_up;
  j["step_down"] = c.step_down;
  j["use_scheduler"] = c.use_scheduler;
  j["seed"] = c.seed;
  j["hpt_profile"] = c.hpt_profile;
  j["val_frac"] = c.val_frac;
  j["standardize"] = c.standardize;
  j["jobs"] = c.jobs;
  return j;
}

ordered_json fold_report_to_json(const FoldReport& f) {
  ordered_json j;
  j["fold_id"] = f.fold_id;
  j["best_epoch"] = f.best_epoch;
  j["best_val_accuracy"] = f.best_val_accuracy;
  j["test_accuracy"] = f.test_accuracy;
  j["test_auc"] = f.test_auc;
  j["test_nll"] = f.test_nll;
  j["n_train"] = f.train_indices.size();
  j["n_val"] = f.val_indices.size();
  j["n_test"] = f.test_indices.size();
  j["test_subject_ids"] = f.test_subject_ids;
  j["roc_points"] = roc_to_json(f.roc_points);
  ordered_json hist = ordered_json::array();
  for (std::size_t e = 0; e < f.history.size(); ++e) {
    ordered_json he;
    he["epoch"] = e + 1;
    he["loss"] = f.history[e].loss;
    he["val_acc"] = f.history[e].val_acc;
    he["lr"] = f.history[e].lr;
    hist.push_back(std::move(he));
  }
  j["history"] = std::move(hist);
  return j;
}

ordered_json cv_report_to_json(const CvReport& cv, const RunManifest& manifest,
                               const std::string& variant) {
  ordered_json j;
  j["format_version"] = 1;
  j["manifest"] = manifest_to_json(manifest, /*include_timestamps=*/false);
  j["variant"] = variant;
  ordered_json folds = ordered_json::array();
  for (const FoldReport& f : cv.folds) folds.push_back(fold_report_to_json(f));
  j["folds"] = std::move(folds);
  ordered_json agg;
  agg["acc_mean"] = cv.acc_mean;
  agg["acc_std"] = cv.acc_std;
  agg["auc_mean"] = cv.auc_mean;
  agg["auc_std"] = cv.auc_std;
  agg["pooled_acc"] = cv.pooled_acc;
  agg["pooled_auc"] = cv.pooled_auc;
  j["aggregate"] = std::move(agg);
  return j;
}

std::string summary_row(const CvReport& cv, const std::string& variant) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-20s | ACC %.4f +/- %.4f | AUC %.4f +/- %.4f | pooled ACC %.4f | "
                "pooled AUC %.4f",
                variant.c_str(), cv.acc_mean, cv.acc_std, cv.auc_mean, cv.auc_std,
                cv.pooled_acc, cv.pooled_auc);
  return std::string(buf);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace egcn
