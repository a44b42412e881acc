#include "egcn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "egcn/kernels.hpp"

namespace egcn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void Tape::check_finite(const Matrix& m, const char* op) const {
  if (!m.all_finite()) throw NumericError(std::string(op) + ": non-finite output");
}

const Matrix& Tape::grad(int id) const {
  const Node& n = node(id);
  if (!n.needs_grad) throw std::invalid_argument("Tape::grad: node does not need grad");
  if (n.grad.empty()) throw std::invalid_argument("Tape::grad: backward has not run");
  return n.grad;
}

int Tape::leaf(Tensor& t) {
  Node n;
  n.leaf = &t;
  n.needs_grad = t.requires_grad;
  n.op = "leaf";
  return push(std::move(n));
}

int Tape::constant(Matrix v, const char* name) {
  Node n;
  n.value = std::move(v);
  n.op = name;
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  Node n;
  n.value = kernels::matmul_nn(av, bv);
  check_finite(n.value, "matmul");
  n.needs_grad = wants(a) || wants(b);
  n.op = "matmul";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, a, b, out] {
      const Matrix& dc = grad_ref(out);
      if (wants(a)) kernels::add_inplace(grad_ref(a), kernels::matmul_nt(dc, value(b)));
      if (wants(b))
        kernels::add_inplace(grad_ref(b),
                             kernels::matmul_nn(kernels::transpose(value(a)), dc));
    };
  }
  return out;
}

int Tape::spmm(std::shared_ptr<const SparseMatrix> s, int x) {
  require(s != nullptr, "spmm: null sparse matrix");
  const Matrix& xv = value(x);
  Node n;
  n.value = kernels::spmm(*s, xv);
  check_finite(n.value, "spmm");
  n.needs_grad = wants(x);
  n.op = "spmm";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    // dx = S^T dy; the transpose is the matrix itself when flagged symmetric
    std::shared_ptr<const SparseMatrix> st =
        s->symmetric ? s : std::make_shared<const SparseMatrix>(s->transposed());
    nodes_[out].backward = [this, st, x, out] {
      kernels::add_inplace(grad_ref(x), kernels::spmm(*st, grad_ref(out)));
    };
  }
  return out;
}

int Tape::add(int a, int b) {
  Node n;
  n.value = kernels::add(value(a), value(b));
  n.needs_grad = wants(a) || wants(b);
  n.op = "add";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, a, b, out] {
      if (wants(a)) kernels::add_inplace(grad_ref(a), grad_ref(out));
      if (wants(b)) kernels::add_inplace(grad_ref(b), grad_ref(out));
    };
  }
  return out;
}

int Tape::sub(int a, int b) {
  Node n;
  n.value = kernels::sub(value(a), value(b));
  n.needs_grad = wants(a) || wants(b);
  n.op = "sub";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, a, b, out] {
      if (wants(a)) kernels::add_inplace(grad_ref(a), grad_ref(out));
      if (wants(b)) kernels::axpy(grad_ref(b), -1.0, grad_ref(out));
    };
  }
  return out;
}

int Tape::scale(int a, double c) {
  Node n;
  n.value = kernels::scale(value(a), c);
  n.needs_grad = wants(a);
  n.op = "scale";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, a, c, out] { kernels::axpy(grad_ref(a), c, grad_ref(out)); };
  }
  return out;
}

int Tape::hadamard(int a, int b) {
  Node n;
  n.value = kernels::hadamard(value(a), value(b));
  n.needs_grad = wants(a) || wants(b);
  n.op = "hadamard";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, a, b, out] {
      const Matrix& dy = grad_ref(out);
      if (wants(a)) kernels::add_inplace(grad_ref(a), kernels::hadamard(dy, value(b)));
      if (wants(b)) kernels::add_inplace(grad_ref(b), kernels::hadamard(dy, value(a)));
    };
  }
  return out;
}

int Tape::relu(int a) {
  Node n;
  n.value = kernels::relu(value(a));
  n.needs_grad = wants(a);
  n.op = "relu";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    // subgradient at 0 is 0
    nodes_[out].backward = [this, a, out] {
      const Matrix& x = value(a);
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(a);
      for (std::size_t i = 0; i < dx.size(); ++i)
        if (x.data[i] > 0.0) dx.data[i] += dy.data[i];
    };
  }
  return out;
}

int Tape::leaky_relu(int a, double slope) {
  Node n;
  n.value = kernels::leaky_relu(value(a), slope);
  n.needs_grad = wants(a);
  n.op = "leaky_relu";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, a, slope, out] {
      const Matrix& x = value(a);
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(a);
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx.data[i] += dy.data[i] * (x.data[i] > 0.0 ? 1.0 : slope);
    };
  }
  return out;
}

int Tape::add_row(int x, int r) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(r);
  require(rv.rows == 1 && rv.cols == xv.cols,
          "add_row: broadcast shape mismatch, " + xv.shape_str() + " vs " + rv.shape_str());
  Node n;
  n.value = Matrix(xv.rows, xv.cols);
  for (int i = 0; i < xv.rows; ++i)
    for (int j = 0; j < xv.cols; ++j) n.value(i, j) = xv(i, j) + rv(0, j);
  n.needs_grad = wants(x) || wants(r);
  n.op = "add_row";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, r, out] {
      const Matrix& dy = grad_ref(out);
      if (wants(x)) kernels::add_inplace(grad_ref(x), dy);
      if (wants(r)) kernels::add_inplace(grad_ref(r), kernels::colsum(dy));
    };
  }
  return out;
}

int Tape::mul_row(int x, int r) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(r);
  require(rv.rows == 1 && rv.cols == xv.cols,
          "mul_row: broadcast shape mismatch, " + xv.shape_str() + " vs " + rv.shape_str());
  Node n;
  n.value = Matrix(xv.rows, xv.cols);
  for (int i = 0; i < xv.rows; ++i)
    for (int j = 0; j < xv.cols; ++j) n.value(i, j) = xv(i, j) * rv(0, j);
  n.needs_grad = wants(x) || wants(r);
  n.op = "mul_row";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, r, out] {
      const Matrix& dy = grad_ref(out);
      const Matrix& xv = value(x);
      const Matrix& rv = value(r);
      if (wants(x)) {
        Matrix& dx = grad_ref(x);
        for (int i = 0; i < xv.rows; ++i)
          for (int j = 0; j < xv.cols; ++j) dx(i, j) += dy(i, j) * rv(0, j);
      }
      if (wants(r)) {
        Matrix& dr = grad_ref(r);
        for (int i = 0; i < xv.rows; ++i)
          for (int j = 0; j < xv.cols; ++j) dr(0, j) += dy(i, j) * xv(i, j);
      }
    };
  }
  return out;
}

int Tape::col_mean(int x) {
  const Matrix& xv = value(x);
  require(xv.rows >= 1, "col_mean: empty input");
  Node n;
  n.value = kernels::scale(kernels::colsum(xv), 1.0 / xv.rows);
  n.needs_grad = wants(x);
  n.op = "col_mean";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, out] {
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(x);
      const double inv = 1.0 / dx.rows;
      for (int i = 0; i < dx.rows; ++i)
        for (int j = 0; j < dx.cols; ++j) dx(i, j) += inv * dy(0, j);
    };
  }
  return out;
}

int Tape::rsqrt_shift(int x, double shift) {
  const Matrix& xv = value(x);
  Node n;
  n.value = Matrix(xv.rows, xv.cols);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double s = xv.data[i] + shift;
    if (!(s > 0.0)) throw NumericError("rsqrt_shift: non-positive argument");
    n.value.data[i] = 1.0 / std::sqrt(s);
  }
  check_finite(n.value, "rsqrt_shift");
  n.needs_grad = wants(x);
  n.op = "rsqrt_shift";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    // d/dx (x+s)^(-1/2) = -y^3 / 2
    nodes_[out].backward = [this, x, out] {
      const Matrix& y = nodes_[out].value;
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(x);
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx.data[i] += dy.data[i] * (-0.5 * y.data[i] * y.data[i] * y.data[i]);
    };
  }
  return out;
}

int Tape::log_softmax_rows(int x) {
  const Matrix& xv = value(x);
  require(xv.cols >= 1, "log_softmax_rows: empty rows");
  Node n;
  n.value = Matrix(xv.rows, xv.cols);
  for (int i = 0; i < xv.rows; ++i) {
    const double* xr = xv.row(i);
    double m = xr[0];
    for (int j = 1; j < xv.cols; ++j) m = std::max(m, xr[j]);
    double se = 0.0;
    for (int j = 0; j < xv.cols; ++j) se += std::exp(xr[j] - m);
    const double lse = m + std::log(se);
    for (int j = 0; j < xv.cols; ++j) n.value(i, j) = xr[j] - lse;
  }
  check_finite(n.value, "log_softmax_rows");
  n.needs_grad = wants(x);
  n.op = "log_softmax";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    // dx = dy - softmax(x) * rowsum(dy)
    nodes_[out].backward = [this, x, out] {
      const Matrix& y = nodes_[out].value;
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(x);
      for (int i = 0; i < y.rows; ++i) {
        double rs = 0.0;
        for (int j = 0; j < y.cols; ++j) rs += dy(i, j);
        for (int j = 0; j < y.cols; ++j) dx(i, j) += dy(i, j) - std::exp(y(i, j)) * rs;
      }
    };
  }
  return out;
}

int Tape::nll_masked(int log_probs, std::shared_ptr<const std::vector<int>> labels,
                     std::shared_ptr<const std::vector<int>> mask) {
  const Matrix& lp = value(log_probs);
  require(labels && static_cast<int>(labels->size()) == lp.rows,
          "nll_masked: labels size != rows");
  require(mask && !mask->empty(), "nll_masked: empty mask");
  for (int i : *mask) {
    require(i >= 0 && i < lp.rows, "nll_masked: mask index out of range");
    require((*labels)[i] >= 0 && (*labels)[i] < lp.cols,
            "nll_masked: label out of range at row " + std::to_string(i));
  }
  Node n;
  double acc = 0.0;
  for (int i : *mask) acc += -lp(i, (*labels)[i]);
  n.value = Matrix(1, 1);
  n.value(0, 0) = acc / static_cast<double>(mask->size());
  check_finite(n.value, "nll_masked");
  n.needs_grad = wants(log_probs);
  n.op = "nll";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, log_probs, labels, mask, out] {
      const double g = grad_ref(out)(0, 0) / static_cast<double>(mask->size());
      Matrix& dx = grad_ref(log_probs);
      for (int i : *mask) dx(i, (*labels)[i]) -= g;
    };
  }
  return out;
}

int Tape::sum_all(int x) {
  Node n;
  n.value = Matrix(1, 1);
  n.value(0, 0) = kernels::sum_all(value(x));
  n.needs_grad = wants(x);
  n.op = "sum";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, out] {
      const double g = grad_ref(out)(0, 0);
      Matrix& dx = grad_ref(x);
      for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += g;
    };
  }
  return out;
}

int Tape::concat_cols(const std::vector<int>& xs) {
  require(!xs.empty(), "concat_cols: no inputs");
  const int rows = value(xs[0]).rows;
  int total = 0;
  bool ng = false;
  for (int id : xs) {
    require(value(id).rows == rows, "concat_cols: row counts differ");
    total += value(id).cols;
    ng = ng || wants(id);
  }
  Node n;
  n.value = Matrix(rows, total);
  int off = 0;
  for (int id : xs) {
    const Matrix& v = value(id);
    for (int i = 0; i < rows; ++i)
      std::copy(v.row(i), v.row(i) + v.cols, n.value.row(i) + off);
    off += v.cols;
  }
  n.needs_grad = ng;
  n.op = "concat";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    std::vector<int> inputs = xs;
    nodes_[out].backward = [this, inputs, out] {
      const Matrix& dy = grad_ref(out);
      int off = 0;
      for (int id : inputs) {
        const int c = value(id).cols;
        if (wants(id)) {
          Matrix& dx = grad_ref(id);
          for (int i = 0; i < dy.rows; ++i) {
            const double* src = dy.row(i) + off;
            double* dst = dx.row(i);
            for (int j = 0; j < c; ++j) dst[j] += src[j];
          }
        }
        off += c;
      }
    };
  }
  return out;
}

int Tape::gather_rows(int x, std::shared_ptr<const std::vector<int>> idx) {
  const Matrix& xv = value(x);
  require(idx != nullptr, "gather_rows: null index list");
  for (int i : *idx)
    require(i >= 0 && i < xv.rows, "gather_rows: index out of range");
  Node n;
  n.value = Matrix(static_cast<int>(idx->size()), xv.cols);
  for (std::size_t e = 0; e < idx->size(); ++e)
    std::copy(xv.row((*idx)[e]), xv.row((*idx)[e]) + xv.cols,
              n.value.row(static_cast<int>(e)));
  n.needs_grad = wants(x);
  n.op = "gather";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, idx, out] {
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(x);
      for (std::size_t e = 0; e < idx->size(); ++e) {
        const double* src = dy.row(static_cast<int>(e));
        double* dst = dx.row((*idx)[e]);
        for (int j = 0; j < dy.cols; ++j) dst[j] += src[j];
      }
    };
  }
  return out;
}

int Tape::scatter_add_rows(int x, std::shared_ptr<const std::vector<int>> idx, int out_rows) {
  const Matrix& xv = value(x);
  require(idx && static_cast<int>(idx->size()) == xv.rows,
          "scatter_add_rows: index list size != rows");
  for (int i : *idx)
    require(i >= 0 && i < out_rows, "scatter_add_rows: index out of range");
  Node n;
  n.value = Matrix(out_rows, xv.cols);
  for (std::size_t e = 0; e < idx->size(); ++e) {
    const double* src = xv.row(static_cast<int>(e));
    double* dst = n.value.row((*idx)[e]);
    for (int j = 0; j < xv.cols; ++j) dst[j] += src[j];
  }
  n.needs_grad = wants(x);
  n.op = "scatter_add";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, idx, out] {
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(x);
      for (std::size_t e = 0; e < idx->size(); ++e) {
        const double* src = dy.row((*idx)[e]);
        double* dst = dx.row(static_cast<int>(e));
        for (int j = 0; j < dy.cols; ++j) dst[j] += src[j];
      }
    };
  }
  return out;
}

int Tape::row_scale(int x, int s) {
  const Matrix& xv = value(x);
  const Matrix& sv = value(s);
  require(sv.cols == 1 && sv.rows == xv.rows,
          "row_scale: scale must be [rows x 1], got " + sv.shape_str());
  Node n;
  n.value = Matrix(xv.rows, xv.cols);
  for (int i = 0; i < xv.rows; ++i) {
    const double c = sv(i, 0);
    const double* src = xv.row(i);
    double* dst = n.value.row(i);
    for (int j = 0; j < xv.cols; ++j) dst[j] = c * src[j];
  }
  n.needs_grad = wants(x) || wants(s);
  n.op = "row_scale";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, x, s, out] {
      const Matrix& dy = grad_ref(out);
      const Matrix& xv = value(x);
      const Matrix& sv = value(s);
      if (wants(x)) {
        Matrix& dx = grad_ref(x);
        for (int i = 0; i < dy.rows; ++i) {
          const double c = sv(i, 0);
          const double* src = dy.row(i);
          double* dst = dx.row(i);
          for (int j = 0; j < dy.cols; ++j) dst[j] += c * src[j];
        }
      }
      if (wants(s)) {
        Matrix& ds = grad_ref(s);
        for (int i = 0; i < dy.rows; ++i) {
          double acc = 0.0;
          const double* xr = xv.row(i);
          const double* dr = dy.row(i);
          for (int j = 0; j < dy.cols; ++j) acc += xr[j] * dr[j];
          ds(i, 0) += acc;
        }
      }
    };
  }
  return out;
}

int Tape::segment_softmax(int logits, std::shared_ptr<const std::vector<int>> offsets) {
  const Matrix& lv = value(logits);
  require(lv.cols == 1, "segment_softmax: logits must be a column");
  require(offsets && offsets->size() >= 2, "segment_softmax: missing offsets");
  require(offsets->front() == 0 && offsets->back() == lv.rows,
          "segment_softmax: offsets do not cover the logits");
  Node n;
  n.value = Matrix(lv.rows, 1);
  const int nseg = static_cast<int>(offsets->size()) - 1;
  for (int s = 0; s < nseg; ++s) {
    const int lo = (*offsets)[s], hi = (*offsets)[s + 1];
    require(lo <= hi, "segment_softmax: offsets not monotone");
    if (lo == hi) continue;
    double m = lv(lo, 0);
    for (int e = lo + 1; e < hi; ++e) m = std::max(m, lv(e, 0));
    double se = 0.0;
    for (int e = lo; e < hi; ++e) se += std::exp(lv(e, 0) - m);
    for (int e = lo; e < hi; ++e) n.value(e, 0) = std::exp(lv(e, 0) - m) / se;
  }
  check_finite(n.value, "segment_softmax");
  n.needs_grad = wants(logits);
  n.op = "segment_softmax";
  int out = push(std::move(n));
  if (nodes_[out].needs_grad) {
    nodes_[out].backward = [this, logits, offsets, out] {
      const Matrix& y = nodes_[out].value;
      const Matrix& dy = grad_ref(out);
      Matrix& dx = grad_ref(logits);
      const int nseg = static_cast<int>(offsets->size()) - 1;
      for (int s = 0; s < nseg; ++s) {
        const int lo = (*offsets)[s], hi = (*offsets)[s + 1];
        double dot = 0.0;
        for (int e = lo; e < hi; ++e) dot += y(e, 0) * dy(e, 0);
        for (int e = lo; e < hi; ++e) dx(e, 0) += y(e, 0) * (dy(e, 0) - dot);
      }
    };
  }
  return out;
}

void Tape::backward(int loss) {
  const Node& ln = node(loss);
  const Matrix& lv = value(loss);
  if (lv.rows != 1 || lv.cols != 1)
    throw std::invalid_argument("Tape::backward: loss must be 1x1, got " + lv.shape_str());
  (void)ln;

  for (Node& n : nodes_) {
    if (!n.needs_grad) continue;
    const Matrix& v = n.leaf ? n.leaf->value : n.value;
    n.grad = Matrix::zeros(v.rows, v.cols);
  }
  if (nodes_[loss].needs_grad) nodes_[loss].grad(0, 0) = 1.0;

  for (int i = size() - 1; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward) n.backward();
  }

  for (Node& n : nodes_) {
    if (n.leaf && n.leaf->requires_grad) {
      n.leaf->ensure_grad();
      kernels::add_inplace(n.leaf->grad, n.grad);
    }
  }
}

}  // namespace egcn
