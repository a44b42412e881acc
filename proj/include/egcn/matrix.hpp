#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace egcn {

/// Dense 2-D array of 64-bit floats, row-major. The value type every kernel
/// and every tape node works on.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
    data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill);
  }

  static Matrix zeros(int r, int c) { return Matrix(r, c, 0.0); }
  static Matrix full(int r, int c, double v) { return Matrix(r, c, v); }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> init) {
    Matrix m(static_cast<int>(init.size()),
             init.size() ? static_cast<int>(init.begin()->size()) : 0);
    int i = 0;
    for (const auto& r : init) {
      if (static_cast<int>(r.size()) != m.cols)
        throw std::invalid_argument("Matrix::from_rows: ragged rows");
      int j = 0;
      for (double v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }
};

inline bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace egcn
