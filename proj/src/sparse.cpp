#include "egcn/sparse.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace egcn {

SparseMatrix::SparseMatrix(int r, int c) : rows(r), cols(c), row_offsets(r + 1, 0) {
  if (r < 0 || c < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries,
                                         bool symmetric) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::invalid_argument("SparseMatrix::from_triplets: entry (" +
                                  std::to_string(t.row) + "," + std::to_string(t.col) +
                                  ") outside " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m(rows, cols);
  m.symmetric = symmetric;
  std::size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    while (i < entries.size() && entries[i].row == r) {
      double v = entries[i].value;
      int c = entries[i].col;
      ++i;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;  // duplicates sum
        ++i;
      }
      m.col_indices.push_back(c);
      m.values.push_back(v);
    }
    m.row_offsets[r + 1] = static_cast<int>(m.values.size());
  }
  if (symmetric) m.validate();
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  m.symmetric = true;
  m.col_indices.resize(n);
  m.values.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    m.col_indices[i] = i;
    m.row_offsets[i + 1] = i + 1;
  }
  return m;
}

double SparseMatrix::value_at(int i, int j) const {
  if (i < 0 || i >= rows || j < 0 || j >= cols)
    throw std::invalid_argument("SparseMatrix::value_at: index out of range");
  const int* begin = col_indices.data() + row_offsets[i];
  const int* end = col_indices.data() + row_offsets[i + 1];
  const int* it = std::lower_bound(begin, end, j);
  if (it != end && *it == j) return values[it - col_indices.data()];
  return 0.0;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int p = row_offsets[r]; p < row_offsets[r + 1]; ++p)
      d(r, col_indices[p]) += values[p];
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> entries;
  entries.reserve(values.size());
  for (int r = 0; r < rows; ++r)
    for (int p = row_offsets[r]; p < row_offsets[r + 1]; ++p)
      entries.push_back({col_indices[p], r, values[p]});
  SparseMatrix t = from_triplets(cols, rows, std::move(entries));
  t.symmetric = symmetric;
  return t;
}

void SparseMatrix::validate() const {
  if (static_cast<int>(row_offsets.size()) != rows + 1)
    throw std::invalid_argument("SparseMatrix: row_offsets size != rows + 1");
  if (row_offsets.front() != 0 || row_offsets.back() != nnz())
    throw std::invalid_argument("SparseMatrix: row_offsets endpoints wrong");
  for (int r = 0; r < rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1])
      throw std::invalid_argument("SparseMatrix: row_offsets not monotone");
    for (int p = row_offsets[r]; p < row_offsets[r + 1]; ++p) {
      if (col_indices[p] < 0 || col_indices[p] >= cols)
        throw std::invalid_argument("SparseMatrix: column index out of range");
      if (p > row_offsets[r] && col_indices[p - 1] >= col_indices[p])
        throw std::invalid_argument("SparseMatrix: columns not strictly increasing in row " +
                                    std::to_string(r));
    }
  }
  if (symmetric) {
    if (rows != cols) throw std::invalid_argument("SparseMatrix: symmetric flag on non-square");
    for (int r = 0; r < rows; ++r)
      for (int p = row_offsets[r]; p < row_offsets[r + 1]; ++p)
        if (value_at(col_indices[p], r) != values[p])
          throw std::invalid_argument("SparseMatrix: symmetric flag violated at (" +
                                      std::to_string(r) + "," +
                                      std::to_string(col_indices[p]) + ")");
  }
}

}  // namespace egcn
