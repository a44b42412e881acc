#include <string>

#include "CLI11.hpp"
#include "egcn/cli.hpp"

namespace {

void add_data_options(CLI::App* cmd, egcn::DataArgs& d) {
  cmd->add_option("--fmri", d.fmri, "fMRI modality CSV");
  cmd->add_option("--smri", d.smri, "sMRI modality CSV");
  cmd->add_option("--pheno", d.pheno, "phenotypic modality CSV");
  cmd->add_option("--sites", d.sites, "site CSV (subject_id,site)");
  cmd->add_option("--labels", d.labels, "label CSV (subject_id,label)");
  cmd->add_flag("--synth", d.synth, "generate a synthetic dataset instead of loading files");
  cmd->add_option("--n", d.n, "synthetic subject count");
  cmd->add_option("--dims", d.dims, "synthetic per-modality feature counts")
      ->delimiter(',');
  cmd->add_option("--n-sites", d.n_sites, "synthetic site count");
  cmd->add_option("--balance", d.balance, "synthetic positive-class fraction");
  cmd->add_option("--signal", d.signal, "synthetic class separation strength");
}

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EGCN: multimodal population-graph classifier"};
  app.require_subcommand(1);

  egcn::TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "cross-validated training run");
  add_data_options(train, train_args.data);
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--folds", train_args.folds, "cross-validation folds");
  train->add_option("--epochs", train_args.epochs, "training epochs per fold");
  train->add_option("--jobs", train_args.jobs, "concurrent fold workers");
  train->add_option("--seed", train_args.seed, "run seed");
  train->add_flag("--no-gat", train_args.no_gat, "disable the attention stage");
  CLI::Option* hpt = train->add_option("--hpt-profile", train_args.hpt_profile,
                                       "hyperparameter profile")
                         ->check(CLI::IsMember({"paper", "plain"}));
  train->add_option("--val-frac", train_args.val_frac,
                    "fraction of training subjects held out for validation");
  train->add_flag("--standardize", train_args.standardize,
                  "z-score features on training statistics per fold");
  train->add_option("--lambda-max-mode", train_args.lambda_max_mode,
                    "Laplacian scaling: fixed2 or power")
      ->check(CLI::IsMember({"fixed2", "power"}));
  train->add_option("--hidden", train_args.hidden, "branch hidden width");
  train->add_option("--k1", train_args.k1, "first branch layer order");
  train->add_option("--k2", train_args.k2, "second branch layer order");
  train->add_option("--k-head", train_args.k_head, "classifier head order");
  train->add_option("--dropout", train_args.dropout, "dropout probability");

  egcn::EvaluateArgs eval_args;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "re-run a checkpoint's test metrics");
  evaluate->add_option("--checkpoint", eval_args.checkpoint, "checkpoint JSON")
      ->required();
  add_data_options(evaluate, eval_args.data);
  evaluate->add_option("--seed", eval_args.seed,
                       "dataset seed; must match the training run for --synth");

  egcn::GradcheckArgs grad_args;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gradcheck->add_option("--component", grad_args.component,
                        "run only checks whose name contains this substring");
  gradcheck->add_flag("--inject-bad-adjoint", grad_args.inject_bad_adjoint,
                      "add a deliberately wrong adjoint (harness self-test)");

  egcn::GraphStatsArgs stats_args;
  CLI::App* graph_stats =
      app.add_subcommand("graph-stats", "population graph statistics");
  graph_stats->add_option("--sites", stats_args.sites, "site CSV")->required();

  egcn::SynthArgs synth_args;
  CLI::App* synth =
      app.add_subcommand("synth", "write a synthetic dataset to disk");
  add_data_options(synth, synth_args.data);
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_flag("--sidecar", synth_args.sidecar,
                  "also write binary sidecars next to the modality CSVs");
  synth->add_option("--seed", synth_args.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 64;
  }

  train_args.hpt_given = hpt->count() > 0;
  train_args.command_line = join_argv(argc, argv);

  if (train->parsed()) return egcn::cmd_train(train_args);
  if (evaluate->parsed()) return egcn::cmd_evaluate(eval_args);
  if (gradcheck->parsed()) return egcn::cmd_gradcheck(grad_args);
  if (graph_stats->parsed()) return egcn::cmd_graph_stats(stats_args);
  if (synth->parsed()) return egcn::cmd_synth(synth_args);
  return 64;
}
