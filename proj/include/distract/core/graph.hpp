#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/core/math.hpp"
#include "distract/core/tensor.hpp"

namespace distract::ad {

using NodeId = std::size_t;

enum class Op : std::uint8_t {
  kParam,
  kInput,
  kLookup,
  kMatVec,
  kMatTVec,
  kMatMulBT,
  kAdd,
  kSub,
  kMul,
  kAddRow,
  kOuter,
  kTanh,
  kSigmoid,
  kSoftmax,
  kConcat,
  kStackRows,
  kNegLogAt,
  kSumAll,
  kAddN,
  kScale,
};

/// Reverse-mode tape over dense vectors and matrices.
///
/// Every builder evaluates its node immediately, so a Graph doubles as an
/// eager evaluator for inference. Nodes only read lower-numbered nodes, so
/// the tape is topologically ordered by construction and backward() is a
/// single reverse sweep.
///
/// Parameter nodes alias external tensors; their gradients accumulate into
/// the tensor passed to param(). A Graph is not thread-safe, but several
/// graphs may share the same read-only parameter tensors.
class Graph {
 public:
  Graph() { nodes_.reserve(1024); }

  NodeId param(const Tensor& value, Tensor* grad = nullptr) {
    require(grad == nullptr || grad->size() == value.size(),
            "param: gradient tensor shape mismatch");
    Node n;
    n.op = Op::kParam;
    n.rows = value.rows();
    n.cols = value.cols();
    n.ext = value.data().data();
    n.ext_grad = grad != nullptr ? grad->data().data() : nullptr;
    return push(std::move(n));
  }

  NodeId input(std::vector<double> value, std::size_t rows, std::size_t cols = 1) {
    require(value.size() == rows * cols, "input: value length does not match shape");
    Node n;
    n.op = Op::kInput;
    n.rows = rows;
    n.cols = cols;
    n.value = std::move(value);
    return push(std::move(n));
  }

  NodeId input(std::vector<double> value) {
    const std::size_t r = value.size();
    return input(std::move(value), r, 1);
  }

  NodeId zeros(std::size_t rows, std::size_t cols = 1) {
    return input(std::vector<double>(rows * cols, 0.0), rows, cols);
  }

  /// Row `row` of a matrix node, as a column vector.
  NodeId lookup(NodeId table, std::size_t row) {
    const Node& t = nodes_[table];
    require(row < t.rows, "lookup: row out of range");
    Node n = make(Op::kLookup, t.cols, 1, table);
    n.index = row;
    const double* src = data(t) + row * t.cols;
    n.value.assign(src, src + t.cols);
    return push(std::move(n));
  }

  /// M x for M (r x c), x (c).
  NodeId matvec(NodeId m, NodeId x) {
    const Node& M = nodes_[m];
    const Node& X = nodes_[x];
    require(M.cols == X.rows * X.cols, "matvec: shape mismatch (" + dims(M) + " * " + dims(X) + ")");
    Node n = make(Op::kMatVec, M.rows, 1, m, x);
    const double* a = data(M);
    const double* v = data(X);
    for (std::size_t i = 0; i < M.rows; ++i) {
      double s = 0.0;
      const double* row = a + i * M.cols;
      for (std::size_t j = 0; j < M.cols; ++j) s += row[j] * v[j];
      n.value[i] = s;
    }
    return push(std::move(n));
  }

  /// M^T x for M (r x c), x (r).
  NodeId mattvec(NodeId m, NodeId x) {
    const Node& M = nodes_[m];
    const Node& X = nodes_[x];
    require(M.rows == X.rows * X.cols, "mattvec: shape mismatch (" + dims(M) + "^T * " + dims(X) + ")");
    Node n = make(Op::kMatTVec, M.cols, 1, m, x);
    const double* a = data(M);
    const double* v = data(X);
    for (std::size_t i = 0; i < M.rows; ++i) {
      const double* row = a + i * M.cols;
      for (std::size_t j = 0; j < M.cols; ++j) n.value[j] += row[j] * v[i];
    }
    return push(std::move(n));
  }

  /// A B^T for A (r x k), B (c x k).
  NodeId matmul_bt(NodeId a, NodeId b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    require(A.cols == B.cols, "matmul_bt: shape mismatch (" + dims(A) + " * " + dims(B) + "^T)");
    Node n = make(Op::kMatMulBT, A.rows, B.rows, a, b);
    const double* pa = data(A);
    const double* pb = data(B);
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t j = 0; j < B.rows; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < A.cols; ++k) s += pa[i * A.cols + k] * pb[j * B.cols + k];
        n.value[i * B.rows + j] = s;
      }
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) { return binary(Op::kAdd, a, b, [](double x, double y) { return x + y; }); }
  NodeId sub(NodeId a, NodeId b) { return binary(Op::kSub, a, b, [](double x, double y) { return x - y; }); }
  NodeId mul(NodeId a, NodeId b) { return binary(Op::kMul, a, b, [](double x, double y) { return x * y; }); }

  /// M + 1 v^T: adds vector v (c) to every row of M (r x c).
  NodeId add_row(NodeId m, NodeId v) {
    const Node& M = nodes_[m];
    const Node& V = nodes_[v];
    require(M.cols == V.rows * V.cols, "add_row: shape mismatch");
    Node n = make(Op::kAddRow, M.rows, M.cols, m, v);
    const double* pm = data(M);
    const double* pv = data(V);
    for (std::size_t i = 0; i < M.rows; ++i)
      for (std::size_t j = 0; j < M.cols; ++j) n.value[i * M.cols + j] = pm[i * M.cols + j] + pv[j];
    return push(std::move(n));
  }

  /// a b^T for vectors a (r), b (c).
  NodeId outer(NodeId a, NodeId b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    const std::size_t r = A.rows * A.cols;
    const std::size_t c = B.rows * B.cols;
    Node n = make(Op::kOuter, r, c, a, b);
    const double* pa = data(A);
    const double* pb = data(B);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) n.value[i * c + j] = pa[i] * pb[j];
    return push(std::move(n));
  }

  NodeId tanh(NodeId a) { return unary(Op::kTanh, a, [](double x) { return std::tanh(x); }); }
  NodeId sigmoid(NodeId a) { return unary(Op::kSigmoid, a, [](double x) { return distract::sigmoid(x); }); }

  /// Softmax over all entries; masked entries (mask[i] == 0) get weight 0.
  NodeId softmax(NodeId a, std::vector<unsigned char> mask = {}) {
    const Node& A = nodes_[a];
    Node n = make(Op::kSoftmax, A.rows, A.cols, a);
    n.value = distract::softmax(std::span<const double>(data(A), A.rows * A.cols), mask);
    n.mask = std::move(mask);
    return push(std::move(n));
  }

  NodeId concat(NodeId a, NodeId b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    const std::size_t na = A.rows * A.cols;
    const std::size_t nb = B.rows * B.cols;
    Node n = make(Op::kConcat, na + nb, 1, a, b);
    std::copy(data(A), data(A) + na, n.value.begin());
    std::copy(data(B), data(B) + nb, n.value.begin() + static_cast<std::ptrdiff_t>(na));
    return push(std::move(n));
  }

  /// Stacks equally sized vectors as the rows of a matrix.
  NodeId stack_rows(std::span<const NodeId> rows) {
    require(!rows.empty(), "stack_rows: no rows");
    const std::size_t width = size_of(rows[0]);
    Node n = make(Op::kStackRows, rows.size(), width);
    n.many.assign(rows.begin(), rows.end());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Node& R = nodes_[rows[i]];
      require(R.rows * R.cols == width, "stack_rows: ragged rows");
      std::copy(data(R), data(R) + width, n.value.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
    return push(std::move(n));
  }

  /// -log(max(p[index], kProbabilityFloor)) as a scalar.
  NodeId neg_log_at(NodeId p, std::size_t index) {
    const Node& P = nodes_[p];
    require(index < P.rows * P.cols, "neg_log_at: index out of range");
    Node n = make(Op::kNegLogAt, 1, 1, p);
    n.index = index;
    n.value[0] = -std::log(std::max(data(P)[index], kProbabilityFloor));
    return push(std::move(n));
  }

  NodeId sum_all(NodeId a) {
    const Node& A = nodes_[a];
    Node n = make(Op::kSumAll, 1, 1, a);
    const double* pa = data(A);
    double s = 0.0;
    for (std::size_t i = 0; i < A.rows * A.cols; ++i) s += pa[i];
    n.value[0] = s;
    return push(std::move(n));
  }

  /// Elementwise sum of equally shaped nodes, accumulated left to right.
  NodeId add_n(std::span<const NodeId> terms) {
    require(!terms.empty(), "add_n: no terms");
    const Node& first = nodes_[terms[0]];
    Node n = make(Op::kAddN, first.rows, first.cols);
    n.many.assign(terms.begin(), terms.end());
    for (NodeId t : terms) {
      const Node& T = nodes_[t];
      require(T.rows * T.cols == n.value.size(), "add_n: shape mismatch");
      const double* pt = data(T);
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += pt[i];
    }
    return push(std::move(n));
  }

  NodeId scale(NodeId a, double k) {
    const Node& A = nodes_[a];
    Node n = make(Op::kScale, A.rows, A.cols, a);
    n.scalar = k;
    const double* pa = data(A);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = k * pa[i];
    return push(std::move(n));
  }

  std::span<const double> value(NodeId id) const {
    const Node& n = nodes_[id];
    return {data(n), n.rows * n.cols};
  }
  std::vector<double> copy(NodeId id) const {
    auto v = value(id);
    return {v.begin(), v.end()};
  }
  double scalar(NodeId id) const { return value(id)[0]; }
  std::size_t rows(NodeId id) const { return nodes_[id].rows; }
  std::size_t cols(NodeId id) const { return nodes_[id].cols; }
  std::size_t size_of(NodeId id) const { return nodes_[id].rows * nodes_[id].cols; }
  std::size_t size() const { return nodes_.size(); }
  Op op(NodeId id) const { return nodes_[id].op; }

  /// Gradient of a non-parameter node after backward(); empty if none flowed.
  std::span<const double> gradient(NodeId id) const { return nodes_[id].grad; }

  /// Propagates d(loss)/d(node) to every node below `loss`. Parameter
  /// gradients are added (not assigned) to the bound gradient tensors.
  void backward(NodeId loss) {
    require(loss < nodes_.size(), "backward: unknown node");
    require(size_of(loss) == 1, "backward: loss node must be scalar");
    for (Node& n : nodes_) n.grad.clear();
    seed(loss)[0] = 1.0;
    for (std::size_t k = loss + 1; k-- > 0;) propagate(k);
  }

 private:
  struct Node {
    Op op = Op::kInput;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    const double* ext = nullptr;
    double* ext_grad = nullptr;
    NodeId a = 0;
    NodeId b = 0;
    std::vector<NodeId> many;
    std::vector<unsigned char> mask;
    std::size_t index = 0;
    double scalar = 0.0;
  };

  static std::string dims(const Node& n) {
    return std::to_string(n.rows) + "x" + std::to_string(n.cols);
  }

  static const double* data(const Node& n) { return n.ext != nullptr ? n.ext : n.value.data(); }

  static Node make(Op op, std::size_t rows, std::size_t cols, NodeId a = 0, NodeId b = 0) {
    Node n;
    n.op = op;
    n.rows = rows;
    n.cols = cols;
    n.a = a;
    n.b = b;
    n.value.assign(rows * cols, 0.0);
    return n;
  }

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  template <class F>
  NodeId binary(Op op, NodeId a, NodeId b, F f) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    require(A.rows * A.cols == B.rows * B.cols,
            "elementwise op: shape mismatch (" + dims(A) + " vs " + dims(B) + ")");
    Node n = make(op, A.rows, A.cols, a, b);
    const double* pa = data(A);
    const double* pb = data(B);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = f(pa[i], pb[i]);
    return push(std::move(n));
  }

  template <class F>
  NodeId unary(Op op, NodeId a, F f) {
    const Node& A = nodes_[a];
    Node n = make(op, A.rows, A.cols, a);
    const double* pa = data(A);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = f(pa[i]);
    return push(std::move(n));
  }

  // Gradient buffer of a node, or nullptr when the node takes no gradient
  // (inputs and unbound parameters).
  double* grad_of(NodeId id) {
    Node& n = nodes_[id];
    if (n.op == Op::kParam) return n.ext_grad;
    if (n.op == Op::kInput) return nullptr;
    if (n.grad.empty()) n.grad.assign(n.rows * n.cols, 0.0);
    return n.grad.data();
  }

  std::vector<double>& seed(NodeId id) {
    Node& n = nodes_[id];
    n.grad.assign(n.rows * n.cols, 0.0);
    return n.grad;
  }

  void propagate(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) return;
    const double* g = n.grad.data();
    const std::size_t len = n.rows * n.cols;

    switch (n.op) {
      case Op::kParam:
      case Op::kInput:
        return;

      case Op::kLookup: {
        const std::size_t width = nodes_[n.a].cols;
        if (double* dt = grad_of(n.a)) {
          dt += n.index * width;
          for (std::size_t j = 0; j < width; ++j) dt[j] += g[j];
        }
        return;
      }

      case Op::kMatVec: {
        const Node& M = nodes_[n.a];
        const double* m = data(M);
        const double* x = data(nodes_[n.b]);
        if (double* dm = grad_of(n.a))
          for (std::size_t i = 0; i < M.rows; ++i) {
            if (g[i] == 0.0) continue;
            double* row = dm + i * M.cols;
            for (std::size_t j = 0; j < M.cols; ++j) row[j] += g[i] * x[j];
          }
        if (double* dx = grad_of(n.b))
          for (std::size_t i = 0; i < M.rows; ++i) {
            const double* row = m + i * M.cols;
            for (std::size_t j = 0; j < M.cols; ++j) dx[j] += row[j] * g[i];
          }
        return;
      }

      case Op::kMatTVec: {
        const Node& M = nodes_[n.a];
        const double* m = data(M);
        const double* x = data(nodes_[n.b]);
        if (double* dm = grad_of(n.a))
          for (std::size_t i = 0; i < M.rows; ++i) {
            double* row = dm + i * M.cols;
            for (std::size_t j = 0; j < M.cols; ++j) row[j] += x[i] * g[j];
          }
        if (double* dx = grad_of(n.b))
          for (std::size_t i = 0; i < M.rows; ++i) {
            const double* row = m + i * M.cols;
            double s = 0.0;
            for (std::size_t j = 0; j < M.cols; ++j) s += row[j] * g[j];
            dx[i] += s;
          }
        return;
      }

      case Op::kMatMulBT: {
        const Node& A = nodes_[n.a];
        const Node& B = nodes_[n.b];
        const double* pa = data(A);
        const double* pb = data(B);
        const std::size_t k = A.cols;
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t j = 0; j < B.rows; ++j) {
              const double gij = g[i * B.rows + j];
              for (std::size_t t = 0; t < k; ++t) da[i * k + t] += gij * pb[j * k + t];
            }
        if (double* db = grad_of(n.b))
          for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t j = 0; j < B.rows; ++j) {
              const double gij = g[i * B.rows + j];
              for (std::size_t t = 0; t < k; ++t) db[j * k + t] += gij * pa[i * k + t];
            }
        return;
      }

      case Op::kAdd:
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) da[i] += g[i];
        if (double* db = grad_of(n.b))
          for (std::size_t i = 0; i < len; ++i) db[i] += g[i];
        return;

      case Op::kSub:
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) da[i] += g[i];
        if (double* db = grad_of(n.b))
          for (std::size_t i = 0; i < len; ++i) db[i] -= g[i];
        return;

      case Op::kMul: {
        const double* pa = data(nodes_[n.a]);
        const double* pb = data(nodes_[n.b]);
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) da[i] += g[i] * pb[i];
        if (double* db = grad_of(n.b))
          for (std::size_t i = 0; i < len; ++i) db[i] += g[i] * pa[i];
        return;
      }

      case Op::kAddRow:
        if (double* dm = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) dm[i] += g[i];
        if (double* dv = grad_of(n.b))
          for (std::size_t i = 0; i < n.rows; ++i)
            for (std::size_t j = 0; j < n.cols; ++j) dv[j] += g[i * n.cols + j];
        return;

      case Op::kOuter: {
        const double* pa = data(nodes_[n.a]);
        const double* pb = data(nodes_[n.b]);
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < n.rows; ++i)
            for (std::size_t j = 0; j < n.cols; ++j) da[i] += g[i * n.cols + j] * pb[j];
        if (double* db = grad_of(n.b))
          for (std::size_t i = 0; i < n.rows; ++i)
            for (std::size_t j = 0; j < n.cols; ++j) db[j] += g[i * n.cols + j] * pa[i];
        return;
      }

      case Op::kTanh:
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) da[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        return;

      case Op::kSigmoid:
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) da[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        return;

      case Op::kSoftmax:
        if (double* da = grad_of(n.a)) {
          const double inner = dot(n.value, std::span<const double>(g, len));
          for (std::size_t i = 0; i < len; ++i) da[i] += n.value[i] * (g[i] - inner);
        }
        return;

      case Op::kConcat: {
        const std::size_t na = size_of(n.a);
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < na; ++i) da[i] += g[i];
        if (double* db = grad_of(n.b))
          for (std::size_t i = na; i < len; ++i) db[i - na] += g[i];
        return;
      }

      case Op::kStackRows:
        for (std::size_t r = 0; r < n.many.size(); ++r)
          if (double* dr = grad_of(n.many[r]))
            for (std::size_t j = 0; j < n.cols; ++j) dr[j] += g[r * n.cols + j];
        return;

      case Op::kNegLogAt: {
        const double p = data(nodes_[n.a])[n.index];
        if (p > kProbabilityFloor)
          if (double* dp = grad_of(n.a)) dp[n.index] -= g[0] / p;
        return;
      }

      case Op::kSumAll:
        if (double* da = grad_of(n.a)) {
          const std::size_t na = size_of(n.a);
          for (std::size_t i = 0; i < na; ++i) da[i] += g[0];
        }
        return;

      case Op::kAddN:
        for (NodeId t : n.many)
          if (double* dt = grad_of(t))
            for (std::size_t i = 0; i < len; ++i) dt[i] += g[i];
        return;

      case Op::kScale:
        if (double* da = grad_of(n.a))
          for (std::size_t i = 0; i < len; ++i) da[i] += n.scalar * g[i];
        return;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace distract::ad
