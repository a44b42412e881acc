#include "egcn/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace egcn {

namespace {

void check_binary_inputs(const std::vector<double>& scores,
                         const std::vector<int>& labels, const char* who) {
  if (scores.size() != labels.size())
    throw std::invalid_argument(std::string(who) + ": scores/labels size mismatch");
  if (scores.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument(std::string(who) + ": labels must be 0/1");
    if (!std::isfinite(scores[i]))
      throw std::invalid_argument(std::string(who) + ": non-finite score");
    (labels[i] == 1 ? pos : neg) = true;
  }
  if (!pos || !neg)
    throw std::invalid_argument(std::string(who) + ": both classes must be present");
}

// Indices sorted by score descending; ties keep ascending index order.
std::vector<int> descending_order(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

int argmax_row(const Matrix& m, int row) {
  if (row < 0 || row >= m.rows) throw std::invalid_argument("argmax_row: row out of range");
  int best = 0;
  for (int j = 1; j < m.cols; ++j)
    if (m(row, j) > m(row, best)) best = j;
  return best;
}

double accuracy(const Matrix& log_probs, const std::vector<int>& labels) {
  if (log_probs.rows == 0) throw std::invalid_argument("accuracy: empty input");
  if (static_cast<int>(labels.size()) != log_probs.rows)
    throw std::invalid_argument("accuracy: labels size != rows");
  long long correct = 0;
  for (int i = 0; i < log_probs.rows; ++i)
    if (argmax_row(log_probs, i) == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(log_probs.rows);
}

ConfusionCounts confusion(const Matrix& log_probs, const std::vector<int>& labels) {
  if (log_probs.cols != 2)
    throw std::invalid_argument("confusion: binary log_probs required");
  if (static_cast<int>(labels.size()) != log_probs.rows)
    throw std::invalid_argument("confusion: labels size != rows");
  ConfusionCounts c;
  for (int i = 0; i < log_probs.rows; ++i) {
    const int pred = argmax_row(log_probs, i);
    if (labels[i] == 1)
      (pred == 1 ? c.tp : c.fn) += 1;
    else
      (pred == 1 ? c.fp : c.tn) += 1;
  }
  return c;
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  check_binary_inputs(scores, labels, "roc_curve");
  long long np = 0, nn = 0;
  for (int l : labels) (l == 1 ? np : nn) += 1;
  const auto order = descending_order(scores);

  std::vector<RocPoint> curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    // all samples sharing this score cross the threshold together
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.push_back({s, static_cast<double>(fp) / static_cast<double>(nn),
                     static_cast<double>(tp) / static_cast<double>(np)});
  }
  return curve;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary_inputs(scores, labels, "auc");
  long long np = 0, nn = 0;
  for (int l : labels) (l == 1 ? np : nn) += 1;
  const auto order = descending_order(scores);

  // integer-count trapezoid: 2*area*np*nn = sum over steps of
  // dFP * (TP_before + TP_after); exact, and equal to pair counting with
  // ties worth 1/2
  long long tp = 0, fp = 0;
  double area2 = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    long long dtp = 0, dfp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? dtp : dfp) += 1;
      ++i;
    }
    area2 += static_cast<double>(dfp) * static_cast<double>(tp + (tp + dtp));
    tp += dtp;
    fp += dfp;
  }
  return area2 / (2.0 * static_cast<double>(np) * static_cast<double>(nn));
}

void write_roc_csv(const std::string& path, const std::vector<RocPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ROC csv: " + path);
  out << "threshold,fpr,tpr\n";
  for (const RocPoint& p : points)
    out << format_double(p.threshold) << "," << format_double(p.fpr) << ","
        << format_double(p.tpr) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace egcn
