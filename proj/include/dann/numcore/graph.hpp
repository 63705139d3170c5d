#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dann/error.hpp"
#include "dann/numcore/params.hpp"
#include "dann/numcore/tensor.hpp"

namespace dann {

namespace testing_hooks {
// Fault injection for gradient-check tests: when set, the weight gradient of
// linear/matmul is scaled by 1.5.
inline bool corrupt_weight_backward = false;
}  // namespace testing_hooks

/// Handle to a node of a Graph.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape over a fixed set of tensor primitives.
///
/// Every op returns a rank-2 tensor (rows x cols); rank-1 inputs are viewed
/// as a single row. Parameter leaves alias ParamStore storage, so backward()
/// accumulates straight into Parameter::grad.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // ---- leaves ----------------------------------------------------------

  Var param(ParamStore& store, ParamId id) {
    Parameter* p = &store[id];
    if (auto it = param_nodes_.find(p); it != param_nodes_.end()) return Var{it->second};
    Node n;
    n.param = p;
    n.requires_grad = true;
    const Var v = push(std::move(n));
    param_nodes_.emplace(p, v.id);
    return v;
  }

  /// Constant input; receives no gradient.
  Var constant(Tensor t) {
    Node n;
    n.value = as_matrix(std::move(t));
    return push(std::move(n));
  }

  /// Free leaf that records its gradient (useful in tests).
  Var leaf(Tensor t) {
    Node n;
    n.value = as_matrix(std::move(t));
    n.requires_grad = true;
    return push(std::move(n));
  }

  Var zeros(std::size_t rows, std::size_t cols) { return constant(Tensor::zeros(rows, cols)); }

  const Tensor& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.param ? n.param->value : n.value;
  }

  /// Gradient accumulated by the last backward(); zeros when untouched.
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.param) return n.param->grad;
    if (n.grad.size() == 0) return Tensor(shape_of(v));
    return n.grad;
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // ---- primitives ------------------------------------------------------

  Var matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    if (B.rows() != k) {
      throw DimensionError("matmul: " + A.shape_str() + " x " + B.shape_str());
    }
    Tensor Y = Tensor::zeros(n, m);
    gemm_nn(A, B, Y);
    return push_op(std::move(Y), {a, b}, [a, b](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      if (g.needs_grad(a)) gemm_nt(dY, g.value(b), g.grad_slot(a), 1.0);
      if (g.needs_grad(b)) gemm_tn(g.value(a), dY, g.grad_slot(b), weight_factor());
    });
  }

  /// out = input * weight + bias, bias broadcast across rows.
  Var linear(Var x, Var w, Var b) {
    const Tensor& X = value(x);
    const Tensor& W = value(w);
    const Tensor& B = value(b);
    const std::size_t n = X.rows(), k = X.cols(), m = W.cols();
    if (W.rows() != k || B.size() != m) {
      throw DimensionError("linear: input " + X.shape_str() + ", weight " + W.shape_str() +
                           ", bias " + B.shape_str());
    }
    Tensor Y = Tensor::zeros(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) Y(i, j) = B[j];
    gemm_nn(X, W, Y);
    return push_op(std::move(Y), {x, w, b}, [x, w, b](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      if (g.needs_grad(x)) gemm_nt(dY, g.value(w), g.grad_slot(x), 1.0);
      if (g.needs_grad(w)) gemm_tn(g.value(x), dY, g.grad_slot(w), weight_factor());
      if (g.needs_grad(b)) {
        Tensor& db = g.grad_slot(b);
        for (std::size_t i = 0; i < dY.rows(); ++i)
          for (std::size_t j = 0; j < dY.cols(); ++j) db[j] += dY(i, j);
      }
    });
  }

  Var add(Var a, Var b) {
    require_same_shape("add", a, b);
    Tensor Y = as_matrix(value(a));
    const Tensor& B = value(b);
    for (std::size_t i = 0; i < Y.size(); ++i) Y[i] += B[i];
    return push_op(std::move(Y), {a, b}, [a, b](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      for (Var v : {a, b}) {
        if (!g.needs_grad(v)) continue;
        Tensor& dv = g.grad_slot(v);
        for (std::size_t i = 0; i < dY.size(); ++i) dv[i] += dY[i];
      }
    });
  }

  Var mul(Var a, Var b) {
    require_same_shape("mul", a, b);
    Tensor Y = as_matrix(value(a));
    const Tensor& B = value(b);
    for (std::size_t i = 0; i < Y.size(); ++i) Y[i] *= B[i];
    return push_op(std::move(Y), {a, b}, [a, b](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      if (g.needs_grad(a)) {
        Tensor& da = g.grad_slot(a);
        const Tensor& B = g.value(b);
        for (std::size_t i = 0; i < dY.size(); ++i) da[i] += dY[i] * B[i];
      }
      if (g.needs_grad(b)) {
        Tensor& db = g.grad_slot(b);
        const Tensor& A = g.value(a);
        for (std::size_t i = 0; i < dY.size(); ++i) db[i] += dY[i] * A[i];
      }
    });
  }

  Var scale(Var a, double s) {
    Tensor Y = as_matrix(value(a));
    for (double& v : Y.data) v *= s;
    return push_op(std::move(Y), {a}, [a, s](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      Tensor& da = g.grad_slot(a);
      for (std::size_t i = 0; i < dY.size(); ++i) da[i] += s * dY[i];
    });
  }

  Var tanh(Var a) {
    Tensor Y = as_matrix(value(a));
    for (double& v : Y.data) v = std::tanh(v);
    return push_op(std::move(Y), {a}, [a](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      const Tensor& Y = g.nodes_[self].value;
      Tensor& da = g.grad_slot(a);
      for (std::size_t i = 0; i < dY.size(); ++i) da[i] += dY[i] * (1.0 - Y[i] * Y[i]);
    });
  }

  Var transpose(Var a) {
    const Tensor& A = value(a);
    const std::size_t r = A.rows(), c = A.cols();
    Tensor Y = Tensor::zeros(c, r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) Y(j, i) = A.data[i * c + j];
    return push_op(std::move(Y), {a}, [a](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      Tensor& da = g.grad_slot(a);
      const std::size_t r = dY.cols(), c = dY.rows();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) da.data[i * c + j] += dY(j, i);
    });
  }

  /// Row-wise softmax restricted to columns where mask is nonzero. Masked
  /// columns get exactly zero weight.
  Var masked_softmax(Var scores, std::span<const double> mask) {
    Tensor Y = as_matrix(value(scores));
    if (mask.size() != Y.cols()) {
      throw DimensionError("masked_softmax: scores " + Y.shape_str() + " vs mask of length " +
                           std::to_string(mask.size()));
    }
    std::vector<double> m(mask.begin(), mask.end());
    for (std::size_t i = 0; i < Y.rows(); ++i) softmax_row(&Y.data[i * Y.cols()], m);
    return push_op(std::move(Y), {scores}, [scores](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      const Tensor& Y = g.nodes_[self].value;
      Tensor& ds = g.grad_slot(scores);
      const std::size_t c = Y.cols();
      for (std::size_t i = 0; i < Y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += Y(i, j) * dY(i, j);
        for (std::size_t j = 0; j < c; ++j) ds.data[i * c + j] += Y(i, j) * (dY(i, j) - dot);
      }
    });
  }

  Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t r = value(parts[0]).rows();
    std::size_t total = 0;
    for (Var p : parts) {
      if (value(p).rows() != r) {
        throw DimensionError("concat_cols: row mismatch " + value(parts[0]).shape_str() + " vs " +
                             value(p).shape_str());
      }
      total += value(p).cols();
    }
    Tensor Y = Tensor::zeros(r, total);
    std::size_t off = 0;
    for (Var p : parts) {
      const Tensor& P = value(p);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < P.cols(); ++j) Y(i, off + j) = P.data[i * P.cols() + j];
      off += P.cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return push_op(std::move(Y), inputs, [inputs](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      std::size_t off = 0;
      for (Var p : inputs) {
        const std::size_t c = g.value(p).cols();
        if (g.needs_grad(p)) {
          Tensor& dp = g.grad_slot(p);
          for (std::size_t i = 0; i < dY.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j) dp.data[i * c + j] += dY(i, off + j);
        }
        off += c;
      }
    });
  }

  Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_rows: no inputs");
    const std::size_t c = value(parts[0]).cols();
    std::vector<double> data;
    std::size_t r = 0;
    for (Var p : parts) {
      const Tensor& P = value(p);
      if (P.cols() != c) {
        throw DimensionError("concat_rows: column mismatch " + value(parts[0]).shape_str() +
                             " vs " + P.shape_str());
      }
      data.insert(data.end(), P.data.begin(), P.data.end());
      r += P.rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return push_op(Tensor({r, c}, std::move(data)), inputs, [inputs](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      std::size_t off = 0;
      for (Var p : inputs) {
        const std::size_t n = g.value(p).size();
        if (g.needs_grad(p)) {
          Tensor& dp = g.grad_slot(p);
          for (std::size_t i = 0; i < n; ++i) dp.data[i] += dY.data[off + i];
        }
        off += n;
      }
    });
  }

  Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Tensor& A = value(a);
    if (begin + count > A.rows()) {
      throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                           std::to_string(begin + count) + ") out of " + A.shape_str());
    }
    const std::size_t c = A.cols();
    std::vector<double> data(A.data.begin() + static_cast<std::ptrdiff_t>(begin * c),
                             A.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
    return push_op(Tensor({count, c}, std::move(data)), {a}, [a, begin](Graph& g, std::size_t self) {
      const Tensor& dY = g.nodes_[self].grad;
      Tensor& da = g.grad_slot(a);
      const std::size_t off = begin * dY.cols();
      for (std::size_t i = 0; i < dY.size(); ++i) da.data[off + i] += dY.data[i];
    });
  }

  /// Gathers rows of `table` by id.
  Var embedding(Var table, std::span<const std::size_t> ids) {
    const Tensor& T = value(table);
    const std::size_t c = T.cols();
    std::vector<double> data;
    data.reserve(ids.size() * c);
    for (std::size_t id : ids) {
      if (id >= T.rows()) {
        throw IndexError("embedding: id " + std::to_string(id) + " outside table " + T.shape_str());
      }
      data.insert(data.end(), T.data.begin() + static_cast<std::ptrdiff_t>(id * c),
                  T.data.begin() + static_cast<std::ptrdiff_t>((id + 1) * c));
    }
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    return push_op(Tensor({rows.size(), c}, std::move(data)), {table},
                   [table, rows](Graph& g, std::size_t self) {
                     const Tensor& dY = g.nodes_[self].grad;
                     Tensor& dt = g.grad_slot(table);
                     const std::size_t c = dY.cols();
                     for (std::size_t i = 0; i < rows.size(); ++i)
                       for (std::size_t j = 0; j < c; ++j) dt.data[rows[i] * c + j] += dY(i, j);
                   });
  }

  Var sum(Var a) {
    double s = 0.0;
    for (double v : value(a).data) s += v;
    return push_op(Tensor({1, 1}, std::vector<double>{s}), {a}, [a](Graph& g, std::size_t self) {
      const double up = g.nodes_[self].grad[0];
      Tensor& da = g.grad_slot(a);
      for (double& v : da.data) v += up;
    });
  }

  Var mean(Var a) {
    const std::size_t n = value(a).size();
    if (n == 0) throw ContractError("mean of an empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
  }

  /// Mean over rows of -log softmax(logits_row)[label].
  Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
    const Tensor& L = value(logits);
    const std::size_t n = L.rows(), c = L.cols();
    if (labels.size() != n) {
      throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                           L.shape_str());
    }
    if (n == 0) throw ContractError("cross_entropy over zero rows");
    Tensor probs = Tensor::zeros(n, c);
    double loss = 0.0;
    std::vector<double> all(c, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] >= c) {
        throw IndexError("cross_entropy: label " + std::to_string(labels[i]) + " with " +
                         std::to_string(c) + " classes");
      }
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, L(i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < c; ++j) z += std::exp(L(i, j) - mx);
      loss += std::log(z) + mx - L(i, labels[i]);
      for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(L(i, j) - mx) / z;
    }
    loss /= static_cast<double>(n);
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    return push_op(Tensor({1, 1}, std::vector<double>{loss}), {logits},
                   [logits, lab, probs = std::move(probs)](Graph& g, std::size_t self) {
                     const double up = g.nodes_[self].grad[0];
                     Tensor& dl = g.grad_slot(logits);
                     const std::size_t n = probs.rows(), c = probs.cols();
                     const double inv = up / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < c; ++j)
                         dl(i, j) += inv * (probs(i, j) - (j == lab[i] ? 1.0 : 0.0));
                   });
  }

  // ---- differentiation -------------------------------------------------

  /// Accumulates d(loss)/d(param) into every reachable Parameter::grad.
  void backward(Var loss) {
    const Tensor& L = value(loss);
    if (L.size() != 1) throw ContractError("backward on non-scalar of shape " + L.shape_str());
    for (Node& n : nodes_)
      if (!n.param) n.grad = Tensor();
    if (!nodes_[loss.id].requires_grad) return;
    grad_slot(loss)[0] += 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.param || !n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(*this, id);
    }
  }

  // ---- pure kernels shared with non-graph callers ------------------------

  /// In-place masked softmax of one row. Throws on an all-zero mask.
  static void softmax_row(double* row, std::span<const double> mask) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j] != 0.0) {
        mx = std::max(mx, row[j]);
        any = true;
      }
    }
    if (!any) throw EmptySupportError("masked_softmax: mask has no unmasked entry");
    double z = 0.0;
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j] != 0.0) {
        row[j] = std::exp(row[j] - mx);
        z += row[j];
      } else {
        row[j] = 0.0;
      }
    }
    for (std::size_t j = 0; j < mask.size(); ++j)
      if (mask[j] != 0.0) row[j] /= z;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    std::function<void(Graph&, std::size_t)> backward;
  };

  static double weight_factor() { return testing_hooks::corrupt_weight_backward ? 1.5 : 1.0; }

  static Tensor as_matrix(Tensor t) {
    if (t.rank() != 2) {
      const std::size_t r = t.rows(), c = t.cols();
      t.shape = {r, c};
    }
    return t;
  }

  std::vector<std::size_t> shape_of(Var v) const {
    const Tensor& t = value(v);
    return {t.rows(), t.cols()};
  }

  bool needs_grad(Var v) const { return nodes_[v.id].requires_grad; }

  Tensor& grad_slot(Var v) {
    Node& n = nodes_[v.id];
    if (n.param) return n.param->grad;
    if (n.grad.size() == 0) n.grad = Tensor(shape_of(v));
    return n.grad;
  }

  void require_same_shape(const char* op, Var a, Var b) const {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
      throw DimensionError(std::string(op) + ": " + A.shape_str() + " vs " + B.shape_str());
    }
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var push_op(Tensor value, std::initializer_list<Var> inputs,
              std::function<void(Graph&, std::size_t)> backward) {
    return push_op(std::move(value), std::vector<Var>(inputs), std::move(backward));
  }

  Var push_op(Tensor value, const std::vector<Var>& inputs,
              std::function<void(Graph&, std::size_t)> backward) {
    Node n;
    n.value = as_matrix(std::move(value));
    for (Var v : inputs) n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
  }

  // Y += A * B
  static void gemm_nn(const Tensor& A, const Tensor& B, Tensor& Y) {
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    for (std::size_t i = 0; i < n; ++i) {
      double* y = &Y.data[i * m];
      for (std::size_t p = 0; p < k; ++p) {
        const double a = A.data[i * k + p];
        if (a == 0.0) continue;
        const double* b = &B.data[p * m];
        for (std::size_t j = 0; j < m; ++j) y[j] += a * b[j];
      }
    }
  }

  // dA += dY * B^T
  static void gemm_nt(const Tensor& dY, const Tensor& B, Tensor& dA, double factor) {
    const std::size_t n = dY.rows(), m = dY.cols(), k = B.rows();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += dY.data[i * m + j] * B.data[p * m + j];
        dA.data[i * k + p] += factor * s;
      }
  }

  // dB += A^T * dY
  static void gemm_tn(const Tensor& A, const Tensor& dY, Tensor& dB, double factor) {
    const std::size_t n = A.rows(), k = A.cols(), m = dY.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double a = factor * A.data[i * k + p];
        if (a == 0.0) continue;
        double* db = &dB.data[p * m];
        const double* dy = &dY.data[i * m];
        for (std::size_t j = 0; j < m; ++j) db[j] += a * dy[j];
      }
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

/// Masked softmax on plain tensors (rank 1 or a single row).
inline Tensor masked_softmax(const Tensor& scores, const Tensor& mask) {
  if (scores.size() != mask.size()) {
    throw DimensionError("masked_softmax: scores " + scores.shape_str() + " vs mask " +
                         mask.shape_str());
  }
  Tensor out = scores;
  Graph::softmax_row(out.data.data(), mask.data);
  return out;
}

}  // namespace dann
