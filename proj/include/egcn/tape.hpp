#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "egcn/matrix.hpp"
#include "egcn/sparse.hpp"
#include "egcn/tensor.hpp"

namespace egcn {

/// Thrown when an operation produces or receives non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Define-by-run reverse-mode tape over 2-D tensors.
///
/// Every op appends one node holding the result; nodes are therefore stored in
/// topological order and backward() is a single reverse sweep that visits each
/// node exactly once. Leaves bind external Tensors without copying; after the
/// sweep their accumulated adjoints are added into Tensor::grad for leaves
/// with requires_grad set.
///
/// A tape and the tensors bound to it belong to one logical thread. Distinct
/// tapes (one per cross-validation fold, say) can run concurrently as long as
/// they share only read-only data.
class Tape {
 public:
  struct Node {
    Matrix value;             // owned result; unused for leaves
    Matrix grad;              // allocated by backward() when needs_grad
    Tensor* leaf = nullptr;   // external storage for leaf nodes
    bool needs_grad = false;
    std::function<void()> backward;  // adjoint rule; empty for leaves/constants
    const char* op = "";
  };

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() { nodes_.clear(); }

  /// Bind an external tensor as a leaf. The tensor must outlive the tape.
  int leaf(Tensor& t);
  /// Record a constant; no gradient ever flows into it.
  int constant(Matrix v, const char* name = "const");

  int matmul(int a, int b);
  int spmm(std::shared_ptr<const SparseMatrix> s, int x);
  int add(int a, int b);
  int sub(int a, int b);
  int scale(int a, double c);
  int hadamard(int a, int b);
  int relu(int a);
  int leaky_relu(int a, double slope);
  /// x[n x d] + broadcast of r[1 x d] over rows.
  int add_row(int x, int r);
  /// x[n x d] * broadcast of r[1 x d] over rows, elementwise.
  int mul_row(int x, int r);
  /// Column means: [n x d] -> [1 x d].
  int col_mean(int x);
  /// Elementwise (x + shift)^(-1/2); requires x + shift > 0.
  int rsqrt_shift(int x, double shift);
  /// Numerically stable row-wise log-softmax.
  int log_softmax_rows(int x);
  /// Mean over `mask` rows of -log_probs[i, labels[i]]; result is 1x1.
  int nll_masked(int log_probs, std::shared_ptr<const std::vector<int>> labels,
                 std::shared_ptr<const std::vector<int>> mask);
  int sum_all(int x);
  /// Horizontal concatenation of same-row-count inputs.
  int concat_cols(const std::vector<int>& xs);
  /// Row gather: out[e] = x[idx[e]].
  int gather_rows(int x, std::shared_ptr<const std::vector<int>> idx);
  /// Row scatter-add: out[idx[e]] += x[e], out has out_rows rows.
  int scatter_add_rows(int x, std::shared_ptr<const std::vector<int>> idx, int out_rows);
  /// Per-row scaling: out[e] = s[e] * x[e], s is [m x 1].
  int row_scale(int x, int s);
  /// Softmax over contiguous segments of a [m x 1] logit column.
  /// offsets has n_segments + 1 entries covering exactly [0, m).
  int segment_softmax(int logits, std::shared_ptr<const std::vector<int>> offsets);

  /// Reverse sweep from a scalar loss node. Populates grads of every
  /// needs_grad node and accumulates leaf adjoints into their tensors.
  void backward(int loss);

  const Matrix& value(int id) const {
    const Node& n = node(id);
    return n.leaf ? n.leaf->value : n.value;
  }
  /// Adjoint of a node; valid after backward() for nodes with needs_grad.
  const Matrix& grad(int id) const;
  bool needs_grad(int id) const { return node(id).needs_grad; }
  const char* op_name(int id) const { return node(id).op; }

 private:
  std::vector<Node> nodes_;

  const Node& node(int id) const {
    if (id < 0 || id >= size()) throw std::invalid_argument("Tape: node id out of range");
    return nodes_[id];
  }
  int push(Node n) {
    nodes_.push_back(std::move(n));
    return size() - 1;
  }
  Matrix& grad_ref(int id) { return nodes_[id].grad; }
  bool wants(int id) const { return nodes_[id].needs_grad; }
  void check_finite(const Matrix& m, const char* op) const;
};

}  // namespace egcn
