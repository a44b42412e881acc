#pragma once

#include <vector>

#include "egcn/matrix.hpp"

namespace egcn {

struct ConfusionCounts {
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  long long total() const { return tp + tn + fp + fn; }
};

// One threshold step of the ROC sweep.  The curve starts at the sentinel
// (threshold +inf, fpr 0, tpr 0) and ends at (min score, 1, 1).
struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Predicted class is the row argmax; an exact tie predicts class 0.
int argmax_row(const Matrix& m, int row);

// Fraction of rows whose argmax equals the label.  labels may be a subset
// selection via indices; empty input is an error.
double accuracy(const Matrix& log_probs, const std::vector<int>& labels);

// Counts with class 1 as positive; binary log_probs only.
ConfusionCounts confusion(const Matrix& log_probs, const std::vector<int>& labels);

// Thresholds at every distinct score, descending, samples with equal scores
// moving together; both classes must be present.
std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                const std::vector<int>& labels);

// Trapezoidal area under roc_curve, computed on integer counts so it equals
// the tie-corrected rank statistic (positive-negative pair counting).
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

void write_roc_csv(const std::string& path, const std::vector<RocPoint>& points);

}  // namespace egcn
