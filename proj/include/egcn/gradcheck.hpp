#pragma once

#include <functional>
#include <string>
#include <vector>

#include "egcn/tensor.hpp"

namespace egcn {

struct GradCheckResult {
  bool passed = true;
  double max_rel_err = 0.0;
  // flat index into x.data of the worst element, -1 when x is empty
  int worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares the analytic gradient of a scalar objective against central
// differences, element by element.
//
// Contract for f: evaluate the objective at x.value and return it; when
// x.requires_grad is set, also run backward so that on return x.grad holds
// dL/dx accumulated from zero.  The harness calls f once with requires_grad
// set to collect the analytic gradient, then repeatedly with it cleared
// while perturbing single elements.  x.value and x.requires_grad are
// restored before returning.
//
// Per element: rel = |analytic - numeric| / max(1, |analytic|); the check
// passes when the max over elements is <= tol.
GradCheckResult grad_check(Tensor& x, const std::function<double(Tensor&)>& f,
                           double step = 1e-5, double tol = 1e-4);

// A named, self-contained gradient check; run() builds its own inputs.
struct CheckCase {
  std::string name;
  std::function<GradCheckResult()> run;
};

// All registered checks: every tape primitive, each layer, and the full
// model objective.  Shared by the CLI gradcheck command and the tests.
const std::vector<CheckCase>& gradcheck_cases();

}  // namespace egcn
