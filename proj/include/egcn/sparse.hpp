#pragma once

#include <vector>

#include "egcn/matrix.hpp"

namespace egcn {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Square-or-rectangular sparse matrix in compressed sparse row form.
/// Column indices are strictly increasing within each row; duplicate
/// triplets are summed at construction. A matrix flagged `symmetric`
/// promises value(i,j) == value(j,i), which validate() checks.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_offsets;  // size rows + 1
  std::vector<int> col_indices;  // size nnz, sorted within each row
  std::vector<double> values;    // size nnz
  bool symmetric = false;

  SparseMatrix() : row_offsets(1, 0) {}
  SparseMatrix(int r, int c);

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries,
                                    bool symmetric = false);
  static SparseMatrix identity(int n);

  int nnz() const { return static_cast<int>(values.size()); }

  /// Value at (i, j); 0 for entries outside the sparsity pattern.
  double value_at(int i, int j) const;

  Matrix to_dense() const;
  SparseMatrix transposed() const;

  /// Throws std::invalid_argument when any CSR invariant is broken.
  void validate() const;
};

}  // namespace egcn
