#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "egcn/report.hpp"
#include "egcn/training.hpp"
#include "egcn/util.hpp"

using namespace egcn;

namespace {

TrainConfig sched_cfg() {
  TrainConfig cfg;
  cfg.lr_base = 1e-7;
  cfg.lr_peak = 1e-3;
  cfg.step_up = 500;
  cfg.step_down = 300;
  return cfg;
}

Tensor make_param(std::vector<double> value, std::vector<double> grad) {
  Matrix v(1, static_cast<int>(value.size()));
  v.data = value;
  Tensor t(std::move(v), true);
  t.ensure_grad();
  t.grad.data = grad;
  return t;
}

double grad_norm(const std::vector<Tensor*>& params) {
  double s = 0.0;
  for (Tensor* p : params)
    for (double g : p->grad.data) s += g * g;
  return std::sqrt(s);
}

EgcnConfig small_model_config(const std::vector<int>& dims) {
  EgcnConfig m;
  m.modality_dims = dims;
  m.hidden_dim = 8;
  m.k1 = 2;
  m.k2 = 3;
  m.k_head = 2;
  m.dropout_p = 0.1;
  return m;
}

}  // namespace

TEST_CASE("cyclic schedule hits the documented anchor points") {
  const TrainConfig cfg = sched_cfg();
  CHECK(cyclic_lr(0, cfg) == 1e-7);
  CHECK(cyclic_lr(500, cfg) == 1e-3);
  CHECK(cyclic_lr(800, cfg) == 1e-7);
  const double hi = 1e-3, lo = 1e-7;
  CHECK(cyclic_lr(650, cfg) == hi - (hi - lo) * 150.0 / 300.0);
  CHECK(cyclic_lr(200, cfg) == lo + (hi - lo) * 200.0 / 500.0);
}

TEST_CASE("cyclic schedule is periodic and continuous") {
  const TrainConfig cfg = sched_cfg();
  for (long long s : {0LL, 1LL, 137LL, 499LL, 500LL, 799LL})
    CHECK(cyclic_lr(s, cfg) == cyclic_lr(s + 800, cfg));
  const double max_jump = (1e-3 - 1e-7) / 300.0 + 1e-18;
  for (long long s = 0; s < 800; ++s)
    CHECK(std::abs(cyclic_lr(s + 1, cfg) - cyclic_lr(s, cfg)) <= max_jump);
  CHECK_THROWS_AS(cyclic_lr(-1, cfg), std::invalid_argument);
}

TEST_CASE("degenerate schedule is constant") {
  TrainConfig cfg = sched_cfg();
  cfg.lr_base = cfg.lr_peak = 5e-4;
  for (long long s : {0LL, 250LL, 500LL, 799LL}) CHECK(cyclic_lr(s, cfg) == 5e-4);
}

TEST_CASE("hyperparameter profiles set the documented fields") {
  TrainConfig base;
  base.clip_norm = 2.0;
  TrainConfig paper = apply_profile(base, "paper");
  CHECK(paper.use_scheduler);
  CHECK(paper.momentum == 0.8);
  CHECK(paper.nesterov);
  CHECK(paper.weight_decay == 1.0);
  CHECK(paper.hpt_profile == "paper");

  TrainConfig plain = apply_profile(base, "plain");
  CHECK_FALSE(plain.use_scheduler);
  CHECK(plain.momentum == 0.9);
  CHECK_FALSE(plain.nesterov);
  CHECK(plain.weight_decay == 0.0);
  CHECK(plain.clip_norm == 2.0);
  CHECK(plain.hpt_profile == "plain");

  CHECK_THROWS_WITH_AS(apply_profile(base, "tuned"),
                       doctest::Contains("unknown hpt profile"),
                       std::invalid_argument);
}

TEST_CASE("config validation rejects out-of-range fields") {
  TrainConfig cfg;
  cfg.validate();
  TrainConfig bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.folds = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.val_frac = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.hpt_profile = "other";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("plain momentum-free step is theta -= lr * grad") {
  Tensor p = make_param({1.0}, {1.0});
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.nesterov = false;
  cfg.weight_decay = 0.0;
  SgdState st;
  sgd_step({&p}, st, 0.1, cfg);
  CHECK(p.value(0, 0) == 0.9);
}

TEST_CASE("nesterov momentum reproduces the two-step hand trace") {
  // mu 0.8, lr 0.1, grad fixed at 1: v1=1, theta1=1-0.1*(1+0.8)=0.82;
  // v2=1.8, theta2=0.82-0.1*(1+0.8*1.8)=0.576
  Tensor p = make_param({1.0}, {1.0});
  TrainConfig cfg;
  cfg.momentum = 0.8;
  cfg.nesterov = true;
  cfg.weight_decay = 0.0;
  SgdState st;
  sgd_step({&p}, st, 0.1, cfg);
  CHECK(p.value(0, 0) == doctest::Approx(0.82).epsilon(1e-15));
  p.grad.data = {1.0};
  sgd_step({&p}, st, 0.1, cfg);
  CHECK(p.value(0, 0) == doctest::Approx(0.576).epsilon(1e-15));
}

TEST_CASE("weight decay enters the gradient, not a separate shrink") {
  // g = 0 + 0.5 * 2 = 1, so theta = 2 - 0.1 * 1
  Tensor p = make_param({2.0}, {0.0});
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.nesterov = false;
  cfg.weight_decay = 0.5;
  SgdState st;
  sgd_step({&p}, st, 0.1, cfg);
  CHECK(p.value(0, 0) == 1.9);
}

TEST_CASE("zero gradients leave parameters bitwise unchanged") {
  Tensor p = make_param({0.125, -3.5, 7.0}, {0.0, 0.0, 0.0});
  const std::vector<double> before = p.value.data;
  TrainConfig cfg = apply_profile(TrainConfig{}, "plain");
  SgdState st;
  sgd_step({&p}, st, 1e-3, cfg);
  sgd_step({&p}, st, 1e-3, cfg);
  CHECK(p.value.data == before);
}

TEST_CASE("optimizer state must match the parameter list") {
  Tensor p = make_param({1.0}, {1.0});
  SgdState st;
  st.velocity.push_back(Matrix::zeros(1, 1));
  st.velocity.push_back(Matrix::zeros(1, 1));
  TrainConfig cfg;
  CHECK_THROWS_AS(sgd_step({&p}, st, 0.1, cfg), std::invalid_argument);
}

TEST_CASE("gradient clipping rescales only past the threshold") {
  Tensor small = make_param({0.0, 0.0}, {0.6, 0.8});
  const std::vector<double> before = small.grad.data;
  CHECK(clip_gradients({&small}, 2.0) == 1.0);
  CHECK(small.grad.data == before);

  Tensor big = make_param({0.0, 0.0}, {3.0, 4.0});
  CHECK(clip_gradients({&big}, 2.0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(grad_norm({&big}) == doctest::Approx(2.0).epsilon(1e-12));

  Tensor single = make_param({0.0}, {4.0});
  CHECK(clip_gradients({&single}, 2.0) == doctest::Approx(0.5).epsilon(1e-15));

  Tensor zeros = make_param({0.0, 0.0}, {0.0, 0.0});
  CHECK(clip_gradients({&zeros}, 2.0) == 1.0);

  Tensor inf = make_param({0.0}, {std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(clip_gradients({&inf}, 2.0), NumericError);
  CHECK_THROWS_AS(clip_gradients({&zeros}, 0.0), std::invalid_argument);
}

TEST_CASE("post-clip norm is bounded on random gradient sets") {
  std::mt19937_64 g(31);
  for (int rep = 0; rep < 100; ++rep) {
    Tensor a = make_param({0, 0, 0}, {0, 0, 0});
    Tensor b = make_param({0, 0, 0, 0}, {0, 0, 0, 0});
    const double scale = std::pow(10.0, uniform_sym(g, 3.0));
    for (double& x : a.grad.data) x = uniform_sym(g, scale);
    for (double& x : b.grad.data) x = uniform_sym(g, scale);
    const double before = grad_norm({&a, &b});
    const double applied = clip_gradients({&a, &b}, 2.0);
    CHECK(grad_norm({&a, &b}) <= 2.0 + 1e-12);
    if (before <= 2.0) CHECK(applied == 1.0);
  }
}

TEST_CASE("stratified folds balance both classes") {
  std::vector<int> labels(10);
  for (int i = 5; i < 10; ++i) labels[i] = 1;
  const auto folds = stratified_kfold(labels, 5, 3);
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    REQUIRE(f.size() == 2);
    CHECK(labels[f[0]] + labels[f[1]] == 1);
  }
}

TEST_CASE("uneven class counts spread by at most one per fold") {
  std::vector<int> labels(87, 0);
  for (int i = 0; i < 40; ++i) labels[i] = 1;
  const auto folds = stratified_kfold(labels, 5, 0);
  std::vector<int> seen;
  for (const auto& f : folds) {
    int pos = 0;
    for (int i : f) pos += labels[i];
    const int neg = static_cast<int>(f.size()) - pos;
    CHECK((pos == 8 || pos == 9));
    CHECK((neg == 9 || neg == 10));
    seen.insert(seen.end(), f.begin(), f.end());
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 87; ++i) CHECK(seen[i] == i);
}

TEST_CASE("single-class folding still partitions evenly") {
  std::vector<int> labels(10, 1);
  const auto folds = stratified_kfold(labels, 5, 0);
  for (const auto& f : folds) CHECK(f.size() == 2);
}

TEST_CASE("folding is seed-deterministic") {
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[i] = i % 2;
  CHECK(stratified_kfold(labels, 5, 9) == stratified_kfold(labels, 5, 9));
  CHECK(stratified_kfold(labels, 5, 9) != stratified_kfold(labels, 5, 10));
}

TEST_CASE("folding rejects impossible requests") {
  std::vector<int> labels{0, 1, 0, 1};
  CHECK_THROWS_AS(stratified_kfold(labels, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_kfold({}, 2, 0), std::invalid_argument);
  std::vector<int> rare{0, 0, 0, 0, 0, 1};
  CHECK_THROWS_WITH_AS(stratified_kfold(rare, 2, 0), doctest::Contains("fewer than k"),
                       std::invalid_argument);
}

TEST_CASE("fold partition and balance hold on random label vectors") {
  std::mt19937_64 g(99);
  for (int rep = 0; rep < 1000; ++rep) {
    const int k = 2 + static_cast<int>(g() % 5);
    const int n = 2 * k + static_cast<int>(g() % 50);
    std::vector<int> labels(n);
    int pos = 0;
    do {
      pos = 0;
      for (int& l : labels) pos += (l = static_cast<int>(g() % 2));
    } while (pos < k || n - pos < k);
    const auto folds = stratified_kfold(labels, k, g());

    std::vector<int> seen;
    std::vector<int> pos_counts, neg_counts;
    for (const auto& f : folds) {
      int p = 0;
      for (int i : f) p += labels[i];
      pos_counts.push_back(p);
      neg_counts.push_back(static_cast<int>(f.size()) - p);
      seen.insert(seen.end(), f.begin(), f.end());
    }
    std::sort(seen.begin(), seen.end());
    REQUIRE(static_cast<int>(seen.size()) == n);
    for (int i = 0; i < n; ++i) REQUIRE(seen[i] == i);
    auto spread = [](const std::vector<int>& c) {
      return *std::max_element(c.begin(), c.end()) -
             *std::min_element(c.begin(), c.end());
    };
    REQUIRE(spread(pos_counts) <= 1);
    REQUIRE(spread(neg_counts) <= 1);
  }
}

TEST_CASE("splits without a validation carve reuse the test fold") {
  std::vector<int> labels(10);
  for (int i = 5; i < 10; ++i) labels[i] = 1;
  TrainConfig cfg;
  cfg.folds = 5;
  cfg.val_frac = 0.0;
  const auto splits = make_fold_splits(labels, cfg);
  REQUIRE(splits.size() == 5);
  for (const auto& s : splits) {
    CHECK(s.val == s.test);
    CHECK(s.train.size() == 8);
  }
}

TEST_CASE("validation carve is disjoint and stratified") {
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[i] = i % 2;
  TrainConfig cfg;
  cfg.folds = 4;
  cfg.val_frac = 0.25;
  cfg.seed = 1;
  const auto splits = make_fold_splits(labels, cfg);
  for (const auto& s : splits) {
    std::set<int> all;
    all.insert(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 40);  // disjoint pieces covering every subject
    CHECK(static_cast<int>(s.train.size() + s.val.size() + s.test.size()) == 40);
    CHECK_FALSE(s.val.empty());
    int val_pos = 0;
    for (int i : s.val) val_pos += labels[i];
    CHECK(val_pos > 0);
    CHECK(val_pos < static_cast<int>(s.val.size()));
  }
}

TEST_CASE("cohort-scale folding yields equal test folds") {
  std::vector<int> labels(870);
  for (int i = 0; i < 870; ++i) labels[i] = i % 2;
  TrainConfig cfg;
  cfg.folds = 5;
  const auto splits = make_fold_splits(labels, cfg);
  std::vector<int> seen;
  for (const auto& s : splits) {
    CHECK(s.test.size() == 174);
    seen.insert(seen.end(), s.test.begin(), s.test.end());
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 870; ++i) CHECK(seen[i] == i);
}

TEST_CASE("subset metrics follow the masked rows") {
  Matrix lp(3, 2);
  lp(0, 0) = std::log(0.7);
  lp(0, 1) = std::log(0.3);
  lp(1, 0) = std::log(0.4);
  lp(1, 1) = std::log(0.6);
  lp(2, 0) = std::log(0.9);
  lp(2, 1) = std::log(0.1);
  std::vector<int> labels{0, 1, 1};
  std::vector<int> all{0, 1, 2};
  CHECK(subset_accuracy(lp, labels, all) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const double want = -(std::log(0.7) + std::log(0.6) + std::log(0.1)) / 3.0;
  CHECK(subset_nll(lp, labels, all) == doctest::Approx(want).epsilon(1e-14));
  CHECK(subset_accuracy(lp, labels, {0}) == 1.0);
  CHECK(subset_nll(lp, labels, {0}) == doctest::Approx(-std::log(0.7)).epsilon(1e-15));
}

TEST_CASE("a strongly separable fold trains to perfect test accuracy") {
  SynthSpec spec;
  spec.n_subjects = 40;
  spec.modality_dims = {6, 4};
  spec.n_sites = 4;
  spec.signal_strength = 10.0;
  spec.seed = 3;
  MultimodalDataset data = synth_dataset(spec);
  GraphBundle b = build_graph_bundle(data, "fixed2");

  TrainConfig tcfg = apply_profile(TrainConfig{}, "plain");
  tcfg.epochs = 150;
  tcfg.folds = 5;
  tcfg.seed = 3;
  const auto splits = make_fold_splits(data.labels, tcfg);
  EgcnConfig mcfg = small_model_config(spec.modality_dims);
  mcfg.seed = 3;
  FoldReport rep = train_fold(data, b.graph, b.lap, splits[0], 0, mcfg, tcfg);
  CHECK(rep.test_accuracy == 1.0);
  CHECK(rep.test_auc == 1.0);
  CHECK(rep.best_epoch >= 1);
  CHECK(rep.history.size() == 150);
}

TEST_CASE("signal-free constant features stay at chance") {
  MultimodalDataset data;
  for (int i = 0; i < 30; ++i) {
    data.subject_ids.push_back("s" + std::to_string(i));
    data.site_labels.push_back("A");
    data.labels.push_back(i % 2);
  }
  data.modalities.emplace_back("flat", Matrix(30, 3, 1.0));
  data.validate();
  GraphBundle b = build_graph_bundle(data, "fixed2");
  TrainConfig tcfg = apply_profile(TrainConfig{}, "plain");
  tcfg.epochs = 3;
  tcfg.folds = 3;
  EgcnConfig mcfg = small_model_config({3});
  CvReport cv = run_cv(data, b.graph, b.lap, mcfg, tcfg);
  CHECK(cv.pooled_acc >= 0.3);
  CHECK(cv.pooled_acc <= 0.7);
}

TEST_CASE("a single epoch records the scheduler floor") {
  SynthSpec spec;
  spec.n_subjects = 12;
  spec.modality_dims = {3};
  spec.n_sites = 2;
  spec.seed = 8;
  MultimodalDataset data = synth_dataset(spec);
  GraphBundle b = build_graph_bundle(data, "fixed2");
  TrainConfig tcfg = apply_profile(TrainConfig{}, "paper");
  tcfg.epochs = 1;
  tcfg.folds = 2;
  const auto splits = make_fold_splits(data.labels, tcfg);
  EgcnConfig mcfg = small_model_config({3});
  FoldReport rep = train_fold(data, b.graph, b.lap, splits[0], 0, mcfg, tcfg);
  CHECK(rep.best_epoch == 1);
  REQUIRE(rep.history.size() == 1);
  CHECK(rep.history[0].lr == 1e-7);
  CHECK(std::isfinite(rep.history[0].loss));
}

TEST_CASE("cross-validation partitions the cohort and repeats exactly") {
  SynthSpec spec;
  spec.n_subjects = 30;
  spec.modality_dims = {5, 3};
  spec.n_sites = 3;
  spec.signal_strength = 2.0;
  spec.seed = 4;
  MultimodalDataset data = synth_dataset(spec);
  GraphBundle b = build_graph_bundle(data, "fixed2");
  TrainConfig tcfg = apply_profile(TrainConfig{}, "paper");
  tcfg.epochs = 2;
  tcfg.folds = 3;
  tcfg.seed = 4;
  EgcnConfig mcfg = small_model_config(spec.modality_dims);
  mcfg.seed = 4;

  CvReport a = run_cv(data, b.graph, b.lap, mcfg, tcfg);
  REQUIRE(a.folds.size() == 3);
  std::vector<int> seen;
  for (const auto& f : a.folds)
    seen.insert(seen.end(), f.test_indices.begin(), f.test_indices.end());
  std::sort(seen.begin(), seen.end());
  REQUIRE(static_cast<int>(seen.size()) == 30);
  for (int i = 0; i < 30; ++i) CHECK(seen[i] == i);

  CvReport c = run_cv(data, b.graph, b.lap, mcfg, tcfg);
  TrainConfig par = tcfg;
  par.jobs = 2;
  CvReport d = run_cv(data, b.graph, b.lap, mcfg, par);
  for (int f = 0; f < 3; ++f) {
    CHECK(fold_report_to_json(a.folds[f]).dump() == fold_report_to_json(c.folds[f]).dump());
    CHECK(fold_report_to_json(a.folds[f]).dump() == fold_report_to_json(d.folds[f]).dump());
  }
  CHECK(a.acc_mean == c.acc_mean);
  CHECK(a.pooled_auc == d.pooled_auc);

  // aggregate means match a direct recomputation
  double acc = 0.0;
  for (const auto& f : a.folds) acc += f.test_accuracy;
  CHECK(a.acc_mean == doctest::Approx(acc / 3.0).epsilon(1e-15));
}

TEST_CASE("numeric failures carry the fold and epoch context") {
  // a wide all-positive modality at the top of the double range overflows
  // the first branch matmul: some column of the seeded weights sums past
  // what 1.7e308 inputs can absorb
  MultimodalDataset data;
  for (int i = 0; i < 8; ++i) {
    data.subject_ids.push_back("s" + std::to_string(i));
    data.site_labels.push_back("A");
    data.labels.push_back(i % 2);
  }
  data.modalities.emplace_back("wide", Matrix(8, 100, 1.7e308));
  data.validate();
  GraphBundle b = build_graph_bundle(data, "fixed2");
  TrainConfig tcfg = apply_profile(TrainConfig{}, "paper");
  tcfg.epochs = 3;
  tcfg.folds = 2;
  tcfg.seed = 1;
  const auto splits = make_fold_splits(data.labels, tcfg);
  EgcnConfig mcfg = small_model_config({100});
  mcfg.hidden_dim = 32;
  mcfg.seed = 1;
  CHECK_THROWS_WITH_AS(
      train_fold(data, b.graph, b.lap, splits[0], 0, mcfg, tcfg),
      doctest::Contains("fold 0, epoch"), NumericError);
}
