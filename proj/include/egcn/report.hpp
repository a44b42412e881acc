#pragma once

#include <string>
#include <utility>
#include <vector>

#include "egcn/checkpoint.hpp"
#include "egcn/training.hpp"

namespace egcn {

// Everything needed to reproduce a run.  Timestamps live only in the
// manifest file; the report embeds the manifest without them so identical
// seeds yield byte-identical reports.
struct RunManifest {
  std::string tool = "egcn";
  std::string artifact_version;
  std::string command;
  ordered_json resolved_config;  // model + training config, defaults materialized
  std::vector<std::pair<std::string, std::string>> inputs;  // (name, digest or spec)
  unsigned long long seed = 0;
  std::string started_at, finished_at;  // ISO-8601 UTC
};

ordered_json manifest_to_json(const RunManifest& m, bool include_timestamps);

ordered_json train_config_to_json(const TrainConfig& c);

ordered_json fold_report_to_json(const FoldReport& f);

// {format_version, manifest (no timestamps), variant, folds, aggregate}.
ordered_json cv_report_to_json(const CvReport& cv, const RunManifest& manifest,
                               const std::string& variant);

// Table-I-style one-line summary: variant, mean/std accuracy and AUC,
// pooled accuracy and AUC.
std::string summary_row(const CvReport& cv, const std::string& variant);

void write_text_file(const std::string& path, const std::string& content);

const char* artifact_version();

}  // namespace egcn
