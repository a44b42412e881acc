#include "egcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace egcn {

GradCheckResult grad_check(Tensor& x, const std::function<double(Tensor&)>& f,
                           double step, double tol) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  const bool saved_rg = x.requires_grad;
  x.requires_grad = true;
  x.zero_grad();
  (void)f(x);
  if (x.grad.rows != x.value.rows || x.grad.cols != x.value.cols)
    throw std::invalid_argument("grad_check: f did not fill x.grad");
  const Matrix analytic = x.grad;

  GradCheckResult r;
  x.requires_grad = false;
  for (std::size_t i = 0; i < x.value.size(); ++i) {
    const double saved = x.value.data[i];
    x.value.data[i] = saved + step;
    const double fp = f(x);
    x.value.data[i] = saved - step;
    const double fm = f(x);
    x.value.data[i] = saved;

    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic.data[i];
    const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    if (rel > r.max_rel_err || r.worst_index < 0) {
      r.max_rel_err = rel;
      r.worst_index = static_cast<int>(i);
      r.analytic_at_worst = a;
      r.numeric_at_worst = numeric;
    }
  }
  x.requires_grad = saved_rg;
  r.passed = r.max_rel_err <= tol;
  return r;
}

}  // namespace egcn
