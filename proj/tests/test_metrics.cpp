#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "egcn/metrics.hpp"
#include "egcn/util.hpp"
#include "oracles.hpp"

using namespace egcn;

namespace {

// log-prob rows from a hard class assignment, far from any tie
Matrix predictions(const std::vector<int>& classes) {
  Matrix m(static_cast<int>(classes.size()), 2);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    m(static_cast<int>(i), 0) = classes[i] == 0 ? -0.1 : -3.0;
    m(static_cast<int>(i), 1) = classes[i] == 0 ? -3.0 : -0.1;
  }
  return m;
}

}  // namespace

TEST_CASE("argmax ties predict class 0") {
  Matrix m = Matrix::from_rows({{-0.5, -0.5}, {-2.0, -0.5}});
  CHECK(argmax_row(m, 0) == 0);
  CHECK(argmax_row(m, 1) == 1);
  CHECK_THROWS_AS(argmax_row(m, 2), std::invalid_argument);
  CHECK(accuracy(Matrix::from_rows({{-0.7, -0.7}}), {0}) == 1.0);
  CHECK(accuracy(Matrix::from_rows({{-0.7, -0.7}}), {1}) == 0.0);
}

TEST_CASE("accuracy and confusion counts") {
  // tp=2 tn=3 fp=1 fn=2 -> 5/8
  std::vector<int> predicted{1, 1, 0, 0, 0, 1, 0, 0};
  std::vector<int> truth{1, 1, 0, 0, 0, 0, 1, 1};
  Matrix lp = predictions(predicted);
  CHECK(accuracy(lp, truth) == 0.625);
  ConfusionCounts cc = confusion(lp, truth);
  CHECK(cc.tp == 2);
  CHECK(cc.tn == 3);
  CHECK(cc.fp == 1);
  CHECK(cc.fn == 2);
  CHECK(cc.total() == 8);
  CHECK_THROWS_AS(accuracy(Matrix(0, 2), {}), std::invalid_argument);
}

TEST_CASE("roc curve for the four-sample hand case") {
  std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  std::vector<int> labels{0, 0, 1, 1};
  std::vector<RocPoint> curve = roc_curve(scores, labels);
  REQUIRE(curve.size() == 5);
  CHECK(std::isinf(curve[0].threshold));
  CHECK(curve[0].fpr == 0.0);
  CHECK(curve[0].tpr == 0.0);
  CHECK(curve[1].threshold == 0.8);
  CHECK(curve[1].fpr == 0.0);
  CHECK(curve[1].tpr == 0.5);
  CHECK(curve[2].threshold == 0.4);
  CHECK(curve[2].fpr == 0.5);
  CHECK(curve[2].tpr == 0.5);
  CHECK(curve[3].threshold == 0.35);
  CHECK(curve[3].fpr == 0.5);
  CHECK(curve[3].tpr == 1.0);
  CHECK(curve[4].threshold == 0.1);
  CHECK(curve[4].fpr == 1.0);
  CHECK(curve[4].tpr == 1.0);
  CHECK(auc(scores, labels) == 0.75);
}

TEST_CASE("degenerate score distributions") {
  std::vector<double> equal{0.5, 0.5, 0.5, 0.5};
  std::vector<int> labels{0, 1, 0, 1};
  std::vector<RocPoint> curve = roc_curve(equal, labels);
  REQUIRE(curve.size() == 2);
  CHECK(curve[1].fpr == 1.0);
  CHECK(curve[1].tpr == 1.0);
  CHECK(auc(equal, labels) == 0.5);

  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == 0.0);

  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(roc_curve({0.1, 0.2}, {0, 0}), std::invalid_argument);
}

TEST_CASE("curve coordinates are monotone") {
  std::mt19937_64 g(3);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + static_cast<int>(g() % 30);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    labels[0] = 0;
    labels[1] = 1;
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(g() % 8) / 8.0;  // forced ties
      if (i > 1) labels[i] = static_cast<int>(g() % 2);
    }
    std::vector<RocPoint> curve = roc_curve(scores, labels);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK(curve[i].fpr >= curve[i - 1].fpr);
      CHECK(curve[i].tpr >= curve[i - 1].tpr);
    }
    CHECK(curve.back().fpr == 1.0);
    CHECK(curve.back().tpr == 1.0);
  }
}

TEST_CASE("trapezoid area equals pair counting") {
  std::mt19937_64 g(7);
  for (int rep = 0; rep < 1000; ++rep) {
    int n = 2 + static_cast<int>(g() % 199);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    labels[0] = 0;
    labels[1] = 1;
    for (int i = 0; i < n; ++i) {
      // coarse grid forces tied scores
      scores[i] = static_cast<double>(g() % 16) / 16.0;
      if (i > 1) labels[i] = static_cast<int>(g() % 2);
    }
    double a = auc(scores, labels);
    double b = oracle::pair_count_auc(scores, labels);
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("flipping labels mirrors the area") {
  std::mt19937_64 g(11);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + static_cast<int>(g() % 40);
    std::vector<double> scores(n);
    std::vector<int> labels(n), flipped(n);
    labels[0] = 0;
    labels[1] = 1;
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(g() % 10) / 10.0;
      if (i > 1) labels[i] = static_cast<int>(g() % 2);
      flipped[i] = 1 - labels[i];
    }
    CHECK(std::abs(auc(scores, labels) + auc(scores, flipped) - 1.0) <= 1e-15);
  }
}

TEST_CASE("roc csv is written in plot-ready form") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "egcn_test_metrics";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string path = (dir / "roc.csv").string();
  write_roc_csv(path, roc_curve({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}));
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() ==
        "threshold,fpr,tpr\n"
        "inf,0,0\n"
        "0.8,0,0.5\n"
        "0.4,0.5,0.5\n"
        "0.35,0.5,1\n"
        "0.1,1,1\n");
  fs::remove_all(dir);
}
