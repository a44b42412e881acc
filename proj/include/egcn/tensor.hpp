#pragma once

#include <stdexcept>

#include "egcn/matrix.hpp"

namespace egcn {

/// A dense value that can participate in autodiff: the matrix itself, a flag
/// saying whether gradients should be accumulated for it, and the gradient
/// slot (allocated lazily, always the same shape as the value).
struct Tensor {
  Matrix value;
  bool requires_grad = false;
  Matrix grad;  // empty until ensure_grad()/backward touches it

  Tensor() = default;
  explicit Tensor(Matrix v, bool rg = false) : value(std::move(v)), requires_grad(rg) {}

  int rows() const { return value.rows; }
  int cols() const { return value.cols; }

  void ensure_grad() {
    if (grad.empty() || !grad.same_shape(value)) grad = Matrix::zeros(value.rows, value.cols);
  }

  void zero_grad() {
    if (grad.same_shape(value))
      grad.fill(0.0);
    else
      grad = Matrix::zeros(value.rows, value.cols);
  }

  void validate() const {
    if (!grad.empty() && !grad.same_shape(value))
      throw std::invalid_argument("Tensor: grad shape " + grad.shape_str() +
                                  " != value shape " + value.shape_str());
    if (!value.all_finite())
      throw std::runtime_error("Tensor: non-finite value entries");
  }
};

}  // namespace egcn
