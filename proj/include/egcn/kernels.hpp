#pragma once

#include "egcn/matrix.hpp"
#include "egcn/sparse.hpp"

namespace egcn {

/// Serial reference kernels. Plain loops, no threading pragmas, kept as the
/// ground truth the parallel kernels are tested against. Both namespaces fix
/// the same per-element accumulation order (ascending inner index, row-partial
/// sums for full reductions), so kernels:: results are bit-identical to ref::
/// at any thread count.
namespace ref {

Matrix matmul_nn(const Matrix& a, const Matrix& b);  // a[m x k] * b[k x n]
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a[m x k] * b[n x k]^T
Matrix transpose(const Matrix& a);
Matrix spmm(const SparseMatrix& s, const Matrix& x);
double sum_all(const Matrix& a);

}  // namespace ref

/// OpenMP-parallel production kernels.
namespace kernels {

Matrix matmul_nn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix spmm(const SparseMatrix& s, const Matrix& x);
double sum_all(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix relu(const Matrix& a);
Matrix leaky_relu(const Matrix& a, double slope);

/// y += x
void add_inplace(Matrix& y, const Matrix& x);
/// y += alpha * x
void axpy(Matrix& y, double alpha, const Matrix& x);
/// Column sums as a 1 x cols row vector.
Matrix colsum(const Matrix& a);
/// Sum of squares of all entries (row-partial order, deterministic).
double sumsq_all(const Matrix& a);

}  // namespace kernels

}  // namespace egcn
