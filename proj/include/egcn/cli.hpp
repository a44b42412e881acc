#pragma once

#include <string>
#include <utility>
#include <vector>

#include "egcn/data.hpp"

namespace egcn {

// Dataset source: either the five input files or the --synth generator.
struct DataArgs {
  std::string fmri, smri, pheno, sites, labels;
  bool synth = false;
  int n = 870;
  std::vector<int> dims{4000, 1200, 6};
  int n_sites = 17;
  double balance = 0.5;
  double signal = 0.0;
};

struct TrainArgs {
  DataArgs data;
  std::string out;
  int folds = 5;
  int epochs = 200;
  int jobs = 1;
  unsigned long long seed = 0;
  bool no_gat = false;
  std::string hpt_profile = "paper";
  bool hpt_given = false;  // profile was named explicitly; shown in the variant
  double val_frac = 0.0;
  bool standardize = false;
  std::string lambda_max_mode = "fixed2";
  int hidden = 32;
  int k1 = 2;
  int k2 = 5;
  int k_head = 2;
  double dropout = 0.5;
  std::string command_line;
};

struct EvaluateArgs {
  std::string checkpoint;
  DataArgs data;
  unsigned long long seed = 0;  // synth regeneration seed; must match training
};

struct GradcheckArgs {
  std::string component;  // substring filter; empty runs everything
  bool inject_bad_adjoint = false;
};

struct GraphStatsArgs {
  std::string sites;
};

struct SynthArgs {
  DataArgs data;
  std::string out;
  bool sidecar = false;
  unsigned long long seed = 0;
};

// Loads or generates the dataset and returns it together with the manifest
// input entries: per-file "fnv1a:<hex>" digests, or the full generator spec
// for synthetic data.
std::pair<MultimodalDataset, std::vector<std::pair<std::string, std::string>>>
make_dataset(const DataArgs& args, unsigned long long seed);

// Table-I-style variant label: GAT on/off always, tuning profile only when
// the caller named one.
std::string variant_label(const TrainArgs& args);

// Exit codes: 0 success, 1 input/configuration error, 2 numeric failure,
// 3 gradient-check failure.  Usage errors (64) are handled by the parser.
int cmd_train(const TrainArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_gradcheck(const GradcheckArgs& args);
int cmd_graph_stats(const GraphStatsArgs& args);
int cmd_synth(const SynthArgs& args);

}  // namespace egcn
