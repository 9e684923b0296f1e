#pragma once
// Dense 2-D double-precision tensors and a tape-based reverse-mode
// differentiation engine.  Every tensor is (rows, cols) row-major; scalars are
// (1,1).  Operations evaluate eagerly and append one node per primitive to a
// Tape.  backward() emits its vector-Jacobian products as ordinary tape
// operations, so gradients are themselves differentiable (needed when a loss
// depends on predicted forces).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gnnlf {

// ---------------------------------------------------------------------------
// Tensor: plain value type used for parameters, inputs and results.
// ---------------------------------------------------------------------------
struct Tensor {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> data;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(int64_t r, int64_t c) : rows(r), cols(c), data(check_size(r, c), 0.0) {}
  Tensor(int64_t r, int64_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != r * c)
      throw std::invalid_argument("tensor data size does not match shape (" + std::to_string(r) +
                                  "," + std::to_string(c) + ")");
    check_size(r, c);
  }

  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
  static Tensor zeros(int64_t r, int64_t c) { return Tensor(r, c); }
  static Tensor full(int64_t r, int64_t c, double v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor row(std::vector<double> v) {
    const int64_t n = static_cast<int64_t>(v.size());
    return Tensor(1, n, std::move(v));
  }
  static Tensor column(std::vector<double> v) {
    const int64_t n = static_cast<int64_t>(v.size());
    return Tensor(n, 1, std::move(v));
  }

  int64_t size() const { return rows * cols; }
  double& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols + c)]; }
  double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols + c)]; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  static size_t check_size(int64_t r, int64_t c) {
    if (r < 0 || c < 0) throw std::invalid_argument("tensor dimensions must be non-negative");
    return static_cast<size_t>(r * c);
  }
};

// ---------------------------------------------------------------------------
// Tape machinery.
// ---------------------------------------------------------------------------
enum class OpKind : uint8_t {
  Leaf,
  Const,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Sin,
  Cos,
  Sqrt,
  Broadcast,
  MatMul,
  Transpose,
  ReduceRows,  // sum over rows: (N,F) -> (1,F)
  ReduceCols,  // sum over cols: (N,F) -> (N,1)
  ReduceAll,   // sum everything: -> (1,1)
  SegmentSum,  // rows grouped by id: (N,F) -> (S,F)
  GatherRows,  // (N,F), idx(E) -> (E,F)
  ConcatCols,  // (N,A),(N,B) -> (N,A+B)
  SliceCols,   // (N,F) -> (N,c1-c0)
};

class Tape;

// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  int64_t rows() const;
  int64_t cols() const;
  const std::vector<double>& values() const;
  Tensor tensor() const;
  double scalar() const;
};

class Tape {
 public:
  struct Node {
    OpKind op = OpKind::Const;
    int64_t rows = 0, cols = 0;
    std::array<int32_t, 2> parent{{-1, -1}};
    std::shared_ptr<const std::vector<int64_t>> index;  // SegmentSum / GatherRows
    int64_t k0 = 0, k1 = 0;                             // SliceCols bounds / SegmentSum count
    bool requires_grad = false;
    std::vector<double> values;
  };

  Tape() { nodes_.reserve(256); }

  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }
  const Node& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }

  // -- leaves ---------------------------------------------------------------
  Var leaf(const Tensor& t) {
    Node n;
    n.op = OpKind::Leaf;
    n.rows = t.rows;
    n.cols = t.cols;
    n.requires_grad = t.requires_grad;
    n.values = t.data;
    return push(std::move(n));
  }

  Var constant(const Tensor& t) {
    Node n;
    n.op = OpKind::Const;
    n.rows = t.rows;
    n.cols = t.cols;
    n.values = t.data;
    return push(std::move(n));
  }
  Var constant(double v) { return constant(Tensor::scalar(v)); }
  Var zeros(int64_t r, int64_t c) { return constant(Tensor::zeros(r, c)); }

  // -- elementwise binary ---------------------------------------------------
  Var add(Var a, Var b) { return binary(OpKind::Add, a, b); }
  Var sub(Var a, Var b) { return binary(OpKind::Sub, a, b); }
  Var mul(Var a, Var b) { return binary(OpKind::Mul, a, b); }
  Var div(Var a, Var b) { return binary(OpKind::Div, a, b); }

  // -- elementwise unary ----------------------------------------------------
  Var neg(Var a) { return unary(OpKind::Neg, a); }
  Var exp(Var a) { return unary(OpKind::Exp, a); }
  Var sin(Var a) { return unary(OpKind::Sin, a); }
  Var cos(Var a) { return unary(OpKind::Cos, a); }
  Var sqrt(Var a) { return unary(OpKind::Sqrt, a); }

  // -- shape ops --------------------------------------------------------------
  Var broadcast_to(Var a, int64_t r, int64_t c) {
    const Node& pa = ref(a);
    if (pa.rows == r && pa.cols == c) return a;
    if (!(pa.rows == r || pa.rows == 1) || !(pa.cols == c || pa.cols == 1))
      throw std::invalid_argument("broadcast: cannot expand (" + shape_str(a) + ") to (" +
                                  std::to_string(r) + "," + std::to_string(c) + ")");
    Node n;
    n.op = OpKind::Broadcast;
    n.rows = r;
    n.cols = c;
    n.parent[0] = a.id;
    n.requires_grad = pa.requires_grad;
    n.values.resize(static_cast<size_t>(r * c));
    for (int64_t i = 0; i < r; ++i) {
      const int64_t si = pa.rows == 1 ? 0 : i;
      for (int64_t j = 0; j < c; ++j) {
        const int64_t sj = pa.cols == 1 ? 0 : j;
        n.values[static_cast<size_t>(i * c + j)] = pa.values[static_cast<size_t>(si * pa.cols + sj)];
      }
    }
    return push(std::move(n));
  }

  Var matmul(Var a, Var b) {
    const Node& pa = ref(a);
    const Node& pb = ref(b);
    if (pa.cols != pb.rows)
      throw std::invalid_argument("matmul: inner dimensions differ, (" + shape_str(a) + ") x (" +
                                  shape_str(b) + ")");
    Node n;
    n.op = OpKind::MatMul;
    n.rows = pa.rows;
    n.cols = pb.cols;
    n.parent = {{a.id, b.id}};
    n.requires_grad = pa.requires_grad || pb.requires_grad;
    n.values.assign(static_cast<size_t>(n.rows * n.cols), 0.0);
    for (int64_t i = 0; i < pa.rows; ++i)
      for (int64_t k = 0; k < pa.cols; ++k) {
        const double aik = pa.values[static_cast<size_t>(i * pa.cols + k)];
        if (aik == 0.0) continue;
        const double* brow = pb.values.data() + k * pb.cols;
        double* orow = n.values.data() + i * n.cols;
        for (int64_t j = 0; j < pb.cols; ++j) orow[j] += aik * brow[j];
      }
    return push(std::move(n));
  }

  Var transpose(Var a) {
    const Node& pa = ref(a);
    Node n;
    n.op = OpKind::Transpose;
    n.rows = pa.cols;
    n.cols = pa.rows;
    n.parent[0] = a.id;
    n.requires_grad = pa.requires_grad;
    n.values.resize(pa.values.size());
    for (int64_t i = 0; i < pa.rows; ++i)
      for (int64_t j = 0; j < pa.cols; ++j)
        n.values[static_cast<size_t>(j * pa.rows + i)] = pa.values[static_cast<size_t>(i * pa.cols + j)];
    return push(std::move(n));
  }

  // -- reductions (deterministic: ascending-index accumulation) --------------
  Var reduce_rows(Var a) {
    const Node& pa = ref(a);
    Node n;
    n.op = OpKind::ReduceRows;
    n.rows = 1;
    n.cols = pa.cols;
    n.parent[0] = a.id;
    n.requires_grad = pa.requires_grad;
    n.values.assign(static_cast<size_t>(pa.cols), 0.0);
    for (int64_t i = 0; i < pa.rows; ++i)
      for (int64_t j = 0; j < pa.cols; ++j) n.values[static_cast<size_t>(j)] += pa.values[static_cast<size_t>(i * pa.cols + j)];
    return push(std::move(n));
  }

  Var reduce_cols(Var a) {
    const Node& pa = ref(a);
    Node n;
    n.op = OpKind::ReduceCols;
    n.rows = pa.rows;
    n.cols = 1;
    n.parent[0] = a.id;
    n.requires_grad = pa.requires_grad;
    n.values.assign(static_cast<size_t>(pa.rows), 0.0);
    for (int64_t i = 0; i < pa.rows; ++i) {
      double s = 0.0;
      for (int64_t j = 0; j < pa.cols; ++j) s += pa.values[static_cast<size_t>(i * pa.cols + j)];
      n.values[static_cast<size_t>(i)] = s;
    }
    return push(std::move(n));
  }

  Var reduce_all(Var a) {
    const Node& pa = ref(a);
    Node n;
    n.op = OpKind::ReduceAll;
    n.rows = 1;
    n.cols = 1;
    n.parent[0] = a.id;
    n.requires_grad = pa.requires_grad;
    double s = 0.0;
    for (double v : pa.values) s += v;
    n.values = {s};
    return push(std::move(n));
  }

  // Sums rows sharing a segment id; ids must lie in [0, n_segments).
  Var segment_sum(Var a, std::shared_ptr<const std::vector<int64_t>> ids, int64_t n_segments) {
    const Node& pa = ref(a);
    if (!ids || static_cast<int64_t>(ids->size()) != pa.rows)
      throw std::invalid_argument("segment_sum: ids length must equal row count");
    if (n_segments < 0) throw std::invalid_argument("segment_sum: negative segment count");
    for (int64_t id : *ids)
      if (id < 0 || id >= n_segments)
        throw std::invalid_argument("segment_sum: segment id " + std::to_string(id) +
                                    " out of range [0," + std::to_string(n_segments) + ")");
    Node n;
    n.op = OpKind::SegmentSum;
    n.rows = n_segments;
    n.cols = pa.cols;
    n.parent[0] = a.id;
    n.index = ids;
    n.k0 = n_segments;
    n.requires_grad = pa.requires_grad;
    n.values.assign(static_cast<size_t>(n_segments * pa.cols), 0.0);
    for (int64_t i = 0; i < pa.rows; ++i) {
      double* seg = n.values.data() + (*ids)[static_cast<size_t>(i)] * pa.cols;
      const double* src = pa.values.data() + i * pa.cols;
      for (int64_t j = 0; j < pa.cols; ++j) seg[j] += src[j];
    }
    return push(std::move(n));
  }
  Var segment_sum(Var a, const std::vector<int64_t>& ids, int64_t n_segments) {
    return segment_sum(a, std::make_shared<const std::vector<int64_t>>(ids), n_segments);
  }

  Var gather_rows(Var a, std::shared_ptr<const std::vector<int64_t>> idx) {
    const Node& pa = ref(a);
    if (!idx) throw std::invalid_argument("gather_rows: null index");
    for (int64_t id : *idx)
      if (id < 0 || id >= pa.rows)
        throw std::invalid_argument("gather_rows: row index " + std::to_string(id) +
                                    " out of range [0," + std::to_string(pa.rows) + ")");
    Node n;
    n.op = OpKind::GatherRows;
    n.rows = static_cast<int64_t>(idx->size());
    n.cols = pa.cols;
    n.parent[0] = a.id;
    n.index = idx;
    n.k0 = pa.rows;  // needed to scatter back
    n.requires_grad = pa.requires_grad;
    n.values.resize(static_cast<size_t>(n.rows * n.cols));
    for (int64_t i = 0; i < n.rows; ++i) {
      const double* src = pa.values.data() + (*idx)[static_cast<size_t>(i)] * pa.cols;
      std::copy(src, src + pa.cols, n.values.data() + i * pa.cols);
    }
    return push(std::move(n));
  }
  Var gather_rows(Var a, const std::vector<int64_t>& idx) {
    return gather_rows(a, std::make_shared<const std::vector<int64_t>>(idx));
  }

  Var concat_cols(Var a, Var b) {
    const Node& pa = ref(a);
    const Node& pb = ref(b);
    if (pa.rows != pb.rows)
      throw std::invalid_argument("concat_cols: row counts differ, (" + shape_str(a) + ") vs (" +
                                  shape_str(b) + ")");
    Node n;
    n.op = OpKind::ConcatCols;
    n.rows = pa.rows;
    n.cols = pa.cols + pb.cols;
    n.parent = {{a.id, b.id}};
    n.k0 = pa.cols;
    n.requires_grad = pa.requires_grad || pb.requires_grad;
    n.values.resize(static_cast<size_t>(n.rows * n.cols));
    for (int64_t i = 0; i < n.rows; ++i) {
      double* dst = n.values.data() + i * n.cols;
      std::copy(pa.values.data() + i * pa.cols, pa.values.data() + (i + 1) * pa.cols, dst);
      std::copy(pb.values.data() + i * pb.cols, pb.values.data() + (i + 1) * pb.cols, dst + pa.cols);
    }
    return push(std::move(n));
  }

  Var slice_cols(Var a, int64_t c0, int64_t c1) {
    const Node& pa = ref(a);
    if (c0 < 0 || c1 > pa.cols || c0 >= c1)
      throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) + "," +
                                  std::to_string(c1) + ") for (" + shape_str(a) + ")");
    Node n;
    n.op = OpKind::SliceCols;
    n.rows = pa.rows;
    n.cols = c1 - c0;
    n.parent[0] = a.id;
    n.k0 = c0;
    n.k1 = c1;
    n.requires_grad = pa.requires_grad;
    n.values.resize(static_cast<size_t>(n.rows * n.cols));
    for (int64_t i = 0; i < n.rows; ++i)
      std::copy(pa.values.data() + i * pa.cols + c0, pa.values.data() + i * pa.cols + c1,
                n.values.data() + i * n.cols);
    return push(std::move(n));
  }

  // -- reverse pass -----------------------------------------------------------
  // Returns, for every differentiable node reachable from `out`, a Var holding
  // dout/dnode.  The VJPs are ordinary tape nodes, so results are themselves
  // differentiable.
  class Gradients {
   public:
    Gradients(Tape* t, std::vector<int32_t> g) : tape_(t), grad_(std::move(g)) {}
    bool has(Var v) const {
      return v.id >= 0 && v.id < static_cast<int32_t>(grad_.size()) && grad_[static_cast<size_t>(v.id)] >= 0;
    }
    Var of(Var v) const {
      if (!has(v)) throw std::logic_error("no gradient recorded for this node");
      return Var{tape_, grad_[static_cast<size_t>(v.id)]};
    }
    // Gradient as a plain tensor; zeros when the output does not depend on v.
    Tensor tensor_of(Var v) const {
      if (!has(v)) return Tensor::zeros(v.rows(), v.cols());
      return of(v).tensor();
    }

   private:
    Tape* tape_;
    std::vector<int32_t> grad_;
  };

  Gradients backward(Var out) {
    const Node& onode = ref(out);
    if (onode.rows != 1 || onode.cols != 1)
      throw std::invalid_argument("backward: output must be a scalar, got (" + shape_str(out) + ")");
    if (!std::isfinite(onode.values[0]))
      throw std::runtime_error("backward: output is not finite");
    std::vector<int32_t> grad(static_cast<size_t>(out.id) + 1, -1);
    if (!onode.requires_grad) return Gradients(this, std::move(grad));
    grad[static_cast<size_t>(out.id)] = constant(Tensor::full(1, 1, 1.0)).id;

    for (int32_t id = out.id; id >= 0; --id) {
      if (grad[static_cast<size_t>(id)] < 0) continue;
      const Node snap = nodes_[static_cast<size_t>(id)];  // copy: pushes may reallocate
      if (!snap.requires_grad || snap.op == OpKind::Leaf || snap.op == OpKind::Const) continue;
      Var g{this, grad[static_cast<size_t>(id)]};
      Var self{this, id};
      Var a{this, snap.parent[0]};
      Var b{this, snap.parent[1]};
      auto acc = [&](Var target, Var contribution) {
        if (!target.valid() || !ref(target).requires_grad) return;
        int32_t& slot = grad[static_cast<size_t>(target.id)];
        slot = slot < 0 ? contribution.id : add(Var{this, slot}, contribution).id;
      };
      switch (snap.op) {
        case OpKind::Add:
          acc(a, g);
          acc(b, g);
          break;
        case OpKind::Sub:
          acc(a, g);
          acc(b, neg(g));
          break;
        case OpKind::Mul:
          acc(a, mul(g, b));
          acc(b, mul(g, a));
          break;
        case OpKind::Div:
          acc(a, div(g, b));
          acc(b, neg(div(mul(g, self), b)));
          break;
        case OpKind::Neg:
          acc(a, neg(g));
          break;
        case OpKind::Exp:
          acc(a, mul(g, self));
          break;
        case OpKind::Sin:
          acc(a, mul(g, cos(a)));
          break;
        case OpKind::Cos:
          acc(a, neg(mul(g, sin(a))));
          break;
        case OpKind::Sqrt:
          acc(a, div(g, mul(constant(2.0), broadcast_to(self, snap.rows, snap.cols))));
          break;
        case OpKind::Broadcast: {
          Var r = g;
          if (ref(a).rows == 1 && snap.rows > 1) r = reduce_rows(r);
          if (ref(a).cols == 1 && snap.cols > 1) r = reduce_cols(r);
          acc(a, r);
          break;
        }
        case OpKind::MatMul:
          acc(a, matmul(g, transpose(b)));
          acc(b, matmul(transpose(a), g));
          break;
        case OpKind::Transpose:
          acc(a, transpose(g));
          break;
        case OpKind::ReduceRows:
        case OpKind::ReduceCols:
        case OpKind::ReduceAll:
          acc(a, broadcast_to(g, ref(a).rows, ref(a).cols));
          break;
        case OpKind::SegmentSum:
          acc(a, gather_rows(g, snap.index));
          break;
        case OpKind::GatherRows:
          acc(a, segment_sum(g, snap.index, snap.k0));
          break;
        case OpKind::ConcatCols:
          acc(a, slice_cols(g, 0, snap.k0));
          acc(b, slice_cols(g, snap.k0, snap.cols));
          break;
        case OpKind::SliceCols: {
          const Node& pa = ref(a);
          Var padded = g;
          if (snap.k0 > 0) padded = concat_cols(zeros(pa.rows, snap.k0), padded);
          if (snap.k1 < pa.cols) padded = concat_cols(padded, zeros(pa.rows, pa.cols - snap.k1));
          acc(a, padded);
          break;
        }
        case OpKind::Leaf:
        case OpKind::Const:
          break;
      }
    }
    return Gradients(this, std::move(grad));
  }

 private:
  friend struct Var;
  std::vector<Node> nodes_;

  const Node& ref(Var v) const {
    if (v.tape != this) throw std::logic_error("variable belongs to a different tape");
    return nodes_.at(static_cast<size_t>(v.id));
  }

  std::string shape_str(Var v) const {
    const Node& n = ref(v);
    return std::to_string(n.rows) + "," + std::to_string(n.cols);
  }

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
  }

  Var unary(OpKind op, Var a) {
    const Node& pa = ref(a);
    Node n;
    n.op = op;
    n.rows = pa.rows;
    n.cols = pa.cols;
    n.parent[0] = a.id;
    n.requires_grad = pa.requires_grad;
    n.values.resize(pa.values.size());
    for (size_t i = 0; i < pa.values.size(); ++i) {
      const double x = pa.values[i];
      switch (op) {
        case OpKind::Neg: n.values[i] = -x; break;
        case OpKind::Exp: n.values[i] = std::exp(x); break;
        case OpKind::Sin: n.values[i] = std::sin(x); break;
        case OpKind::Cos: n.values[i] = std::cos(x); break;
        case OpKind::Sqrt:
          if (x < 0.0) throw std::domain_error("sqrt of negative value " + std::to_string(x));
          n.values[i] = std::sqrt(x);
          break;
        default: throw std::logic_error("not a unary op");
      }
    }
    return push(std::move(n));
  }

  Var binary(OpKind op, Var a, Var b) {
    const Node& pa = ref(a);
    {
      const Node& pb = ref(b);
      if (pa.rows != pb.rows || pa.cols != pb.cols) {
        // Broadcasting is normalized here: b expands into a's shape.
        if ((pb.rows == pa.rows || pb.rows == 1) && (pb.cols == pa.cols || pb.cols == 1))
          return binary(op, a, broadcast_to(b, pa.rows, pa.cols));
        if ((pa.rows == pb.rows || pa.rows == 1) && (pa.cols == pb.cols || pa.cols == 1))
          return binary(op, broadcast_to(a, pb.rows, pb.cols), b);
        throw std::invalid_argument("shape mismatch: (" + shape_str(a) + ") vs (" + shape_str(b) + ")");
      }
    }
    const Node& pb = ref(b);
    Node n;
    n.op = op;
    n.rows = pa.rows;
    n.cols = pa.cols;
    n.parent = {{a.id, b.id}};
    n.requires_grad = pa.requires_grad || pb.requires_grad;
    n.values.resize(pa.values.size());
    for (size_t i = 0; i < pa.values.size(); ++i) {
      const double x = pa.values[i], y = pb.values[i];
      switch (op) {
        case OpKind::Add: n.values[i] = x + y; break;
        case OpKind::Sub: n.values[i] = x - y; break;
        case OpKind::Mul: n.values[i] = x * y; break;
        case OpKind::Div:
          if (y == 0.0) throw std::domain_error("division by zero");
          n.values[i] = x / y;
          break;
        default: throw std::logic_error("not a binary op");
      }
    }
    return push(std::move(n));
  }
};

inline int64_t Var::rows() const { return tape->node(id).rows; }
inline int64_t Var::cols() const { return tape->node(id).cols; }
inline const std::vector<double>& Var::values() const { return tape->node(id).values; }
inline Tensor Var::tensor() const {
  const auto& n = tape->node(id);
  return Tensor(n.rows, n.cols, n.values);
}
inline double Var::scalar() const {
  const auto& n = tape->node(id);
  if (n.rows != 1 || n.cols != 1) throw std::logic_error("scalar() on non-scalar variable");
  return n.values[0];
}

// ---------------------------------------------------------------------------
// Convenience operators and composite functions.
// ---------------------------------------------------------------------------
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator+(Var a, double k) { return a + a.tape->constant(k); }
inline Var operator-(Var a, double k) { return a - a.tape->constant(k); }
inline Var operator*(Var a, double k) { return a * a.tape->constant(k); }
inline Var operator/(Var a, double k) { return a / a.tape->constant(k); }
inline Var operator+(double k, Var a) { return a + k; }
inline Var operator*(double k, Var a) { return a * k; }
inline Var operator-(double k, Var a) { return a.tape->constant(k) - a; }
inline Var operator/(double k, Var a) { return a.tape->constant(k) / a; }

inline Var exp(Var a) { return a.tape->exp(a); }
inline Var sin(Var a) { return a.tape->sin(a); }
inline Var cos(Var a) { return a.tape->cos(a); }
inline Var sqrt(Var a) { return a.tape->sqrt(a); }
inline Var square(Var a) { return a * a; }
inline Var sigmoid(Var a) { return 1.0 / (1.0 + exp(-a)); }
inline Var silu(Var a) { return a * sigmoid(a); }
inline Var sum_rows(Var a) { return a.tape->reduce_rows(a); }
inline Var sum_cols(Var a) { return a.tape->reduce_cols(a); }
inline Var sum_all(Var a) { return a.tape->reduce_all(a); }

// x:(N,In) * W:(In,Out) + b:(1,Out)
inline Var linear(Var x, Var W, Var b) { return x.tape->matmul(x, W) + b; }

// ---------------------------------------------------------------------------
// Finite-difference gradient validation.
// f maps (tape, leaf) to a scalar Var.  Returns the maximum over coordinates
// of |analytic - central_difference| / (|analytic| + 1e-12).
// ---------------------------------------------------------------------------
inline double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
  Tensor xg = x;
  xg.requires_grad = true;

  Tape tape;
  Var leaf = tape.leaf(xg);
  Var out = f(tape, leaf);
  auto grads = tape.backward(out);
  const Tensor analytic = grads.tensor_of(leaf);

  auto eval = [&](const Tensor& p) {
    Tape t;
    Var l = t.leaf(p);
    const double v = f(t, l).scalar();
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: function not finite at probe point");
    return v;
  };

  double worst = 0.0;
  Tensor probe = xg;  // keep requires_grad on: f may run its own reverse pass
  for (size_t i = 0; i < probe.data.size(); ++i) {
    const double orig = probe.data[i];
    probe.data[i] = orig + h;
    const double fp = eval(probe);
    probe.data[i] = orig - h;
    const double fm = eval(probe);
    probe.data[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel = std::abs(analytic.data[i] - numeric) / (std::abs(analytic.data[i]) + 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace gnnlf
