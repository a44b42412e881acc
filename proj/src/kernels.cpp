#include "egcn/kernels.hpp"

#include <stdexcept>

namespace egcn {

namespace {

void require_inner(const Matrix& a, const Matrix& b, int ac, int br, const char* op) {
  if (ac != br)
    throw std::invalid_argument(std::string(op) + ": inner dimensions disagree, " +
                                a.shape_str() + " vs " + b.shape_str());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch, " + a.shape_str() +
                                " vs " + b.shape_str());
}

}  // namespace

namespace ref {

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  require_inner(a, b, a.cols, b.rows, "matmul_nn");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_inner(a, b, a.cols, b.cols, "matmul_nt");
  Matrix c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Matrix spmm(const SparseMatrix& s, const Matrix& x) {
  if (s.cols != x.rows)
    throw std::invalid_argument("spmm: inner dimensions disagree, sparse cols " +
                                std::to_string(s.cols) + " vs dense rows " +
                                std::to_string(x.rows));
  Matrix y(s.rows, x.cols);
  for (int r = 0; r < s.rows; ++r)
    for (int p = s.row_offsets[r]; p < s.row_offsets[r + 1]; ++p) {
      const double v = s.values[p];
      const double* xr = x.row(s.col_indices[p]);
      double* yr = y.row(r);
      for (int j = 0; j < x.cols; ++j) yr[j] += v * xr[j];
    }
  return y;
}

double sum_all(const Matrix& a) {
  double total = 0.0;
  for (int i = 0; i < a.rows; ++i) {
    double partial = 0.0;
    const double* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) partial += r[j];
    total += partial;
  }
  return total;
}

}  // namespace ref

namespace kernels {

namespace {
constexpr long long kParallelCutoff = 1 << 15;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  require_inner(a, b, a.cols, b.rows, "matmul_nn");
  Matrix c(a.rows, b.cols);
  const int m = a.rows, kk = a.cols, n = b.cols;
  const long long work = 1LL * m * kk * n;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int k = 0; k < kk; ++k) {
      const double aik = ai[k];
      const double* bk = b.row(k);
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_inner(a, b, a.cols, b.cols, "matmul_nt");
  Matrix c(a.rows, b.rows);
  const int m = a.rows, kk = a.cols, n = b.rows;
  const long long work = 1LL * m * kk * n;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (int k = 0; k < kk; ++k) acc += ai[k] * bj[k];
      ci[j] = acc;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  const int m = a.rows, n = a.cols;
#pragma omp parallel for schedule(static) if (1LL * m * n > kParallelCutoff)
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row(i);
    for (int j = 0; j < n; ++j) t(j, i) = ai[j];
  }
  return t;
}

Matrix spmm(const SparseMatrix& s, const Matrix& x) {
  if (s.cols != x.rows)
    throw std::invalid_argument("spmm: inner dimensions disagree, sparse cols " +
                                std::to_string(s.cols) + " vs dense rows " +
                                std::to_string(x.rows));
  Matrix y(s.rows, x.cols);
  const int d = x.cols;
#pragma omp parallel for schedule(static) if (1LL * s.nnz() * d > kParallelCutoff)
  for (int r = 0; r < s.rows; ++r) {
    double* yr = y.row(r);
    for (int p = s.row_offsets[r]; p < s.row_offsets[r + 1]; ++p) {
      const double v = s.values[p];
      const double* xr = x.row(s.col_indices[p]);
      for (int j = 0; j < d; ++j) yr[j] += v * xr[j];
    }
  }
  return y;
}

double sum_all(const Matrix& a) {
  std::vector<double> partial(a.rows, 0.0);
#pragma omp parallel for schedule(static) if (a.size() > static_cast<std::size_t>(kParallelCutoff))
  for (int i = 0; i < a.rows; ++i) {
    double p = 0.0;
    const double* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) p += r[j];
    partial[i] = p;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c(a.rows, a.cols);
  const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (n > static_cast<std::size_t>(kParallelCutoff))
  for (long long i = 0; i < static_cast<long long>(n); ++i) c.data[i] = a.data[i] + b.data[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix c(a.rows, a.cols);
  const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (n > static_cast<std::size_t>(kParallelCutoff))
  for (long long i = 0; i < static_cast<long long>(n); ++i) c.data[i] = a.data[i] - b.data[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c(a.rows, a.cols);
  const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (n > static_cast<std::size_t>(kParallelCutoff))
  for (long long i = 0; i < static_cast<long long>(n); ++i) c.data[i] = a.data[i] * b.data[i];
  return c;
}

Matrix scale(const Matrix& a, double c) {
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = c * a.data[i];
  return out;
}

Matrix relu(const Matrix& a) {
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
  return out;
}

Matrix leaky_relu(const Matrix& a, double slope) {
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data[i] = a.data[i] > 0.0 ? a.data[i] : slope * a.data[i];
  return out;
}

void add_inplace(Matrix& y, const Matrix& x) {
  require_same_shape(y, x, "add_inplace");
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += x.data[i];
}

void axpy(Matrix& y, double alpha, const Matrix& x) {
  require_same_shape(y, x, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += alpha * x.data[i];
}

Matrix colsum(const Matrix& a) {
  Matrix out(1, a.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) out.data[j] += r[j];
  }
  return out;
}

double sumsq_all(const Matrix& a) {
  double total = 0.0;
  for (int i = 0; i < a.rows; ++i) {
    double partial = 0.0;
    const double* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) partial += r[j] * r[j];
    total += partial;
  }
  return total;
}

}  // namespace kernels

}  // namespace egcn
