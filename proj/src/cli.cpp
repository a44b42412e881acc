#include "egcn/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <utility>

#include "egcn/checkpoint.hpp"
#include "egcn/gradcheck.hpp"
#include "egcn/graph.hpp"
#include "egcn/metrics.hpp"
#include "egcn/report.hpp"
#include "egcn/tape.hpp"
#include "egcn/training.hpp"
#include "egcn/util.hpp"

namespace egcn {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

SynthSpec synth_spec_from(const DataArgs& a, unsigned long long seed) {
  SynthSpec spec;
  spec.n_subjects = a.n;
  spec.modality_dims = a.dims;
  spec.n_sites = a.n_sites;
  spec.class_balance = a.balance;
  spec.signal_strength = a.signal;
  spec.seed = seed;
  return spec;
}

std::string synth_spec_string(const DataArgs& a, unsigned long long seed) {
  std::string dims;
  for (std::size_t i = 0; i < a.dims.size(); ++i) {
    if (i) dims += '|';
    dims += std::to_string(a.dims[i]);
  }
  return "synth:n=" + std::to_string(a.n) + ",dims=" + dims +
         ",n_sites=" + std::to_string(a.n_sites) +
         ",balance=" + fmt_double(a.balance) +
         ",signal=" + fmt_double(a.signal) + ",seed=" + std::to_string(seed);
}

void add_file_input(std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::string& name, const std::string& path) {
  inputs.emplace_back(name, "fnv1a:" + hex64(fnv1a_file(path)));
  const std::string sidecar = path + ".egcn";
  if (std::filesystem::exists(sidecar))
    inputs.emplace_back(name + ".egcn", "fnv1a:" + hex64(fnv1a_file(sidecar)));
}

int subject_index(const std::map<std::string, int>& by_id, const std::string& id) {
  auto it = by_id.find(id);
  if (it == by_id.end())
    throw std::invalid_argument("subject '" + id +
                                "' from the checkpoint is not in the dataset");
  return it->second;
}

}  // namespace

std::pair<MultimodalDataset, std::vector<std::pair<std::string, std::string>>>
make_dataset(const DataArgs& args, unsigned long long seed) {
  std::vector<std::pair<std::string, std::string>> inputs;
  if (args.synth) {
    inputs.emplace_back("synth", synth_spec_string(args, seed));
    return {synth_dataset(synth_spec_from(args, seed)), std::move(inputs)};
  }
  if (args.fmri.empty() || args.smri.empty() || args.pheno.empty() ||
      args.sites.empty() || args.labels.empty())
    throw std::invalid_argument(
        "dataset source incomplete: pass --synth or all of "
        "--fmri --smri --pheno --sites --labels");
  DatasetPaths paths;
  paths.modality_files = {
      {"fmri", args.fmri}, {"smri", args.smri}, {"pheno", args.pheno}};
  paths.sites_file = args.sites;
  paths.labels_file = args.labels;
  add_file_input(inputs, "fmri", args.fmri);
  add_file_input(inputs, "smri", args.smri);
  add_file_input(inputs, "pheno", args.pheno);
  add_file_input(inputs, "sites", args.sites);
  add_file_input(inputs, "labels", args.labels);
  return {assemble_dataset(paths), std::move(inputs)};
}

std::string variant_label(const TrainArgs& args) {
  std::string v = args.no_gat ? "EGCN w/o GAT" : "EGCN w GAT";
  if (args.hpt_given) v += (args.hpt_profile == "paper") ? " w HPT" : " w/o HPT";
  return v;
}

int cmd_train(const TrainArgs& args) {
  try {
    if (args.out.empty()) throw std::invalid_argument("train requires --out");
    TrainConfig tcfg = apply_profile(TrainConfig{}, args.hpt_profile);
    tcfg.epochs = args.epochs;
    tcfg.folds = args.folds;
    tcfg.seed = args.seed;
    tcfg.val_frac = args.val_frac;
    tcfg.standardize = args.standardize;
    tcfg.jobs = args.jobs;
    tcfg.validate();

    RunManifest manifest;
    manifest.artifact_version = artifact_version();
    manifest.command = args.command_line;
    manifest.seed = args.seed;
    manifest.started_at = iso_utc_now();

    auto [data, inputs] = make_dataset(args.data, args.seed);
    manifest.inputs = std::move(inputs);
    data.validate();
    log_info("dataset: " + std::to_string(data.n()) + " subjects, " +
             std::to_string(data.modalities.size()) + " modalities");

    EgcnConfig mcfg;
    mcfg.modality_dims = data.modality_dims();
    mcfg.hidden_dim = args.hidden;
    mcfg.k1 = args.k1;
    mcfg.k2 = args.k2;
    mcfg.k_head = args.k_head;
    mcfg.dropout_p = args.dropout;
    mcfg.use_gat = !args.no_gat;
    mcfg.seed = args.seed;
    mcfg.lambda_max_mode = args.lambda_max_mode;
    mcfg.validate();

    manifest.resolved_config =
        ordered_json{{"model", config_to_json(mcfg)},
                     {"training", train_config_to_json(tcfg)}};

    GraphBundle bundle = build_graph_bundle(data, mcfg.lambda_max_mode);
    log_info("graph: " + std::to_string(bundle.graph.undirected_edge_count()) +
             " undirected edges, lambda_max=" + fmt_double(bundle.lap.lambda_max));

    std::vector<EgcnModel> best_models;
    CvReport cv = run_cv(data, bundle.graph, bundle.lap, mcfg, tcfg, &best_models);
    manifest.finished_at = iso_utc_now();

    const std::string variant = variant_label(args);
    std::filesystem::create_directories(args.out);
    write_text_file(args.out + "/report.json",
                    cv_report_to_json(cv, manifest, variant).dump(2) + "\n");
    write_text_file(args.out + "/manifest.json",
                    manifest_to_json(manifest, true).dump(2) + "\n");
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
      const FoldReport& fr = cv.folds[f];
      ordered_json eval;
      eval["fold_id"] = fr.fold_id;
      eval["best_epoch"] = fr.best_epoch;
      eval["standardize"] = tcfg.standardize;
      eval["metrics"] = ordered_json{{"test_accuracy", fr.test_accuracy},
                                     {"test_auc", fr.test_auc},
                                     {"test_nll", fr.test_nll}};
      eval["test_subject_ids"] = fr.test_subject_ids;
      eval["train_subject_ids"] = fr.train_subject_ids;
      save_checkpoint(
          args.out + "/checkpoint_fold" + std::to_string(fr.fold_id) + ".json",
          best_models[f], eval);
      write_roc_csv(args.out + "/roc_fold" + std::to_string(fr.fold_id) + ".csv",
                    fr.roc_points);
    }
    log_info("wrote report.json, manifest.json, checkpoints, ROC curves to " +
             args.out);
    std::printf("%s\n", summary_row(cv, variant).c_str());
    return 0;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cmd_evaluate(const EvaluateArgs& args) {
  try {
    if (args.checkpoint.empty())
      throw std::invalid_argument("evaluate requires --checkpoint");
    LoadedCheckpoint ck = load_checkpoint(args.checkpoint);
    if (ck.eval.is_null())
      throw std::invalid_argument(
          args.checkpoint +
          ": checkpoint has no eval block; only training checkpoints carry one");

    auto [data, inputs] = make_dataset(args.data, args.seed);
    (void)inputs;
    data.validate();

    std::map<std::string, int> by_id;
    for (int i = 0; i < data.n(); ++i) by_id[data.subject_ids[i]] = i;

    std::vector<int> test_idx;
    for (const auto& id :
         ck.eval.at("test_subject_ids").get<std::vector<std::string>>())
      test_idx.push_back(subject_index(by_id, id));

    if (ck.eval.value("standardize", false)) {
      std::vector<int> train_idx;
      for (const auto& id :
           ck.eval.at("train_subject_ids").get<std::vector<std::string>>())
        train_idx.push_back(subject_index(by_id, id));
      standardize_features(data, train_idx);
    }

    GraphBundle bundle = build_graph_bundle(data, ck.model.config.lambda_max_mode);
    Matrix lp = infer_log_probs(ck.model, data, bundle.graph, bundle.lap);

    const double acc = subset_accuracy(lp, data.labels, test_idx);
    const double nll = subset_nll(lp, data.labels, test_idx);
    std::vector<double> scores;
    std::vector<int> lab;
    for (int i : test_idx) {
      scores.push_back(std::exp(lp(i, 1)));
      lab.push_back(data.labels[i]);
    }
    const double roc_auc = auc(scores, lab);

    const ordered_json& rec = ck.eval.at("metrics");
    const double racc = rec.at("test_accuracy").get<double>();
    const double rauc = rec.at("test_auc").get<double>();
    const double rnll = rec.at("test_nll").get<double>();

    // Counting metrics must reproduce exactly; the NLL sum tolerates
    // last-bit reordering when the dataset rows arrive permuted.
    const bool acc_ok = acc == racc;
    const bool auc_ok = roc_auc == rauc;
    const bool nll_ok = std::abs(nll - rnll) <= 1e-12;
    std::printf("test_accuracy recorded=%.17g recomputed=%.17g %s\n", racc, acc,
                acc_ok ? "OK" : "MISMATCH");
    std::printf("test_auc recorded=%.17g recomputed=%.17g %s\n", rauc, roc_auc,
                auc_ok ? "OK" : "MISMATCH");
    std::printf("test_nll recorded=%.17g recomputed=%.17g %s\n", rnll, nll,
                nll_ok ? "OK" : "MISMATCH");
    if (!(acc_ok && auc_ok && nll_ok)) {
      std::fprintf(stderr, "evaluate: recomputed metrics do not match the checkpoint\n");
      return 1;
    }
    std::printf("evaluate: metrics reproduced\n");
    return 0;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cmd_gradcheck(const GradcheckArgs& args) {
  try {
    std::vector<CheckCase> cases = gradcheck_cases();
    if (args.inject_bad_adjoint) {
      cases.push_back({"injected_bad_adjoint", [] {
                         Tensor x(Matrix::zeros(2, 3));
                         for (int i = 0; i < 6; ++i)
                           x.value.data[i] = 0.3 + 0.2 * i;
                         auto f = [](Tensor& t) {
                           double s = 0.0;
                           for (double v : t.value.data) s += v * v;
                           if (t.requires_grad) {
                             t.ensure_grad();
                             // adjoint deliberately off by a constant
                             for (std::size_t i = 0; i < t.value.data.size(); ++i)
                               t.grad.data[i] += 2.0 * t.value.data[i] + 0.1;
                           }
                           return s;
                         };
                         return grad_check(x, f);
                       }});
    }
    if (!args.component.empty()) {
      std::vector<CheckCase> kept;
      for (auto& c : cases)
        if (c.name.find(args.component) != std::string::npos) kept.push_back(c);
      if (kept.empty()) {
        std::fprintf(stderr, "gradcheck: unknown component '%s'\n",
                     args.component.c_str());
        return 1;
      }
      cases = std::move(kept);
    }
    std::vector<std::string> failed;
    for (auto& c : cases) {
      GradCheckResult r = c.run();
      std::printf("%-32s max_rel_err=%.3e %s\n", c.name.c_str(), r.max_rel_err,
                  r.passed ? "PASS" : "FAIL");
      if (!r.passed) failed.push_back(c.name);
    }
    if (!failed.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < failed.size(); ++i) {
        if (i) joined += ", ";
        joined += failed[i];
      }
      std::fprintf(stderr, "gradcheck: FAILED: %s\n", joined.c_str());
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cmd_graph_stats(const GraphStatsArgs& args) {
  try {
    if (args.sites.empty())
      throw std::invalid_argument("graph-stats requires --sites");
    auto loaded = load_sites_csv(args.sites);
    const std::vector<std::string>& sites = loaded.second;
    PopulationGraph g = PopulationGraph::from_sites(sites);
    std::printf("nodes %d\n", g.n_nodes);
    std::printf("undirected_edges %d\n", g.undirected_edge_count());
    std::printf("connected_components %d\n", connected_components(g));
    std::map<std::string, long long> counts;
    for (const auto& s : sites) ++counts[s];
    for (const auto& [name, count] : counts)
      std::printf("site %s %lld\n", name.c_str(), count);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cmd_synth(const SynthArgs& args) {
  try {
    if (args.out.empty()) throw std::invalid_argument("synth requires --out");
    MultimodalDataset data = synth_dataset(synth_spec_from(args.data, args.seed));
    std::filesystem::create_directories(args.out);
    auto written = write_dataset(args.out, data, args.sidecar);
    for (const auto& [name, path] : written)
      std::printf("%s %s\n", name.c_str(), path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace egcn
