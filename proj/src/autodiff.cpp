#include "mpssl/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_map>

#include "mpssl/common.hpp"

namespace mpssl::ad {

namespace {

std::atomic<std::uint64_t> g_seq{1};

Var make_node(Matrix value, std::vector<Edge> edges) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  for (auto& e : edges) {
    if (e.parent->requires_grad) {
      n->requires_grad = true;
      n->edges.push_back(std::move(e));
    }
  }
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a->rows() == b->rows() && a->cols() == b->cols(),
          std::string(op) + ": shape mismatch (" + std::to_string(a->rows()) +
              "x" + std::to_string(a->cols()) + " vs " +
              std::to_string(b->rows()) + "x" + std::to_string(b->cols()) + ")");
}

}  // namespace

double Node::scalar_value() const {
  require(value.rows() == 1 && value.cols() == 1, "scalar_value: not 1x1");
  return value(0, 0);
}

Var constant(Matrix v) { return make_node(std::move(v), {}); }

Var scalar(double s) {
  Matrix m(1, 1);
  m(0, 0) = s;
  return constant(std::move(m));
}

Var leaf(Matrix v) {
  auto n = make_node(std::move(v), {});
  n->requires_grad = true;
  return n;
}

Var detach(const Var& a) { return constant(a->value); }

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_node(a->value + b->value,
                   {{a, [](const Var& g) { return g; }},
                    {b, [](const Var& g) { return g; }}});
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_node(a->value - b->value,
                   {{a, [](const Var& g) { return g; }},
                    {b, [](const Var& g) { return neg(g); }}});
}

Var neg(const Var& a) {
  return make_node(-a->value, {{a, [](const Var& g) { return neg(g); }}});
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make_node(a->value.cwiseProduct(b->value),
                   {{a, [b](const Var& g) { return mul(g, b); }},
                    {b, [a](const Var& g) { return mul(g, a); }}});
}

Var div(const Var& a, const Var& b) {
  check_same_shape(a, b, "div");
  return make_node(a->value.cwiseQuotient(b->value),
                   {{a, [b](const Var& g) { return div(g, b); }},
                    {b, [a, b](const Var& g) {
                       return neg(div(mul(g, a), mul(b, b)));
                     }}});
}

Var scale(const Var& a, double s) {
  return make_node(a->value * s,
                   {{a, [s](const Var& g) { return scale(g, s); }}});
}

Var add_scalar(const Var& a, double s) {
  return make_node(a->value.array() + s, {{a, [](const Var& g) { return g; }}});
}

Var matmul(const Var& a, const Var& b) {
  require(a->cols() == b->rows(), "matmul: inner dimension mismatch");
  return make_node(a->value * b->value,
                   {{a, [b](const Var& g) { return matmul_nt(g, b); }},
                    {b, [a](const Var& g) { return matmul_tn(a, g); }}});
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a->cols() == b->cols(), "matmul_nt: inner dimension mismatch");
  return make_node(a->value * b->value.transpose(),
                   {{a, [b](const Var& g) { return matmul(g, b); }},
                    {b, [a](const Var& g) { return matmul_tn(g, a); }}});
}

Var matmul_tn(const Var& a, const Var& b) {
  require(a->rows() == b->rows(), "matmul_tn: inner dimension mismatch");
  return make_node(a->value.transpose() * b->value,
                   {{a, [b](const Var& g) { return matmul_nt(b, g); }},
                    {b, [a](const Var& g) { return matmul(a, g); }}});
}

Var transpose(const Var& a) {
  return make_node(a->value.transpose(),
                   {{a, [](const Var& g) { return transpose(g); }}});
}

Var sum(const Var& a) {
  Matrix m(1, 1);
  m(0, 0) = a->value.sum();
  const int r = a->rows(), c = a->cols();
  return make_node(std::move(m), {{a, [r, c](const Var& g) {
                                     return broadcast_scalar(g, r, c);
                                   }}});
}

Var mean(const Var& a) {
  require(a->rows() > 0 && a->cols() > 0, "mean: empty matrix");
  return scale(sum(a), 1.0 / (static_cast<double>(a->rows()) * a->cols()));
}

Var rowsum(const Var& a) {
  const int c = a->cols();
  return make_node(a->value.rowwise().sum(),
                   {{a, [c](const Var& g) { return broadcast_cols(g, c); }}});
}

Var colsum(const Var& a) {
  const int r = a->rows();
  return make_node(a->value.colwise().sum(),
                   {{a, [r](const Var& g) { return broadcast_rows(g, r); }}});
}

Var broadcast_scalar(const Var& a, int rows, int cols) {
  require(a->rows() == 1 && a->cols() == 1, "broadcast_scalar: input not 1x1");
  return make_node(Matrix::Constant(rows, cols, a->value(0, 0)),
                   {{a, [](const Var& g) { return sum(g); }}});
}

Var broadcast_cols(const Var& a, int cols) {
  require(a->cols() == 1, "broadcast_cols: input not a column");
  return make_node(a->value.replicate(1, cols),
                   {{a, [](const Var& g) { return rowsum(g); }}});
}

Var broadcast_rows(const Var& a, int rows) {
  require(a->rows() == 1, "broadcast_rows: input not a row");
  return make_node(a->value.replicate(rows, 1),
                   {{a, [](const Var& g) { return colsum(g); }}});
}

// Ops whose vjp references their own output capture it weakly: the node owns
// the edge, so a strong self-capture would be a shared_ptr cycle. The vjp is
// only ever invoked while the node is alive.
Var vexp(const Var& a) {
  auto n = make_node(a->value.array().exp(), {});
  if (a->requires_grad) {
    n->requires_grad = true;
    n->edges.push_back({a, [w = std::weak_ptr<Node>(n)](const Var& g) {
                          return mul(g, w.lock());
                        }});
  }
  return n;
}

Var vlog(const Var& a) {
  return make_node(a->value.array().log(),
                   {{a, [a](const Var& g) { return div(g, a); }}});
}

Var vsqrt(const Var& a) {
  auto n = make_node(a->value.array().sqrt(), {});
  if (a->requires_grad) {
    n->requires_grad = true;
    // Guarded denominator: sqrt'(0) would be infinite; a zero upstream must
    // not turn into NaN (zero-norm feature vectors reach this).
    n->edges.push_back({a, [w = std::weak_ptr<Node>(n)](const Var& g) {
                          return div(scale(g, 0.5), max_scalar(w.lock(), 1e-150));
                        }});
  }
  return n;
}

Var vabs(const Var& a) {
  Matrix sgn = a->value.array().sign();
  return make_node(a->value.array().abs(),
                   {{a, [s = std::move(sgn)](const Var& g) {
                       return mul(g, constant(s));
                     }}});
}

Var clamp(const Var& a, double lo, double hi) {
  Matrix v = a->value.array().max(lo).min(hi);
  Matrix mask =
      ((a->value.array() > lo) && (a->value.array() < hi)).cast<double>();
  return make_node(std::move(v), {{a, [m = std::move(mask)](const Var& g) {
                                     return mul(g, constant(m));
                                   }}});
}

Var max_scalar(const Var& a, double s) {
  Matrix v = a->value.array().max(s);
  Matrix mask = (a->value.array() > s).cast<double>();
  return make_node(std::move(v), {{a, [m = std::move(mask)](const Var& g) {
                                     return mul(g, constant(m));
                                   }}});
}

Var leaky_relu(const Var& a, double slope) {
  Matrix mask = (a->value.array() > 0.0).select(
      Matrix::Constant(a->rows(), a->cols(), 1.0),
      Matrix::Constant(a->rows(), a->cols(), slope));
  return make_node(a->value.cwiseProduct(mask),
                   {{a, [m = mask](const Var& g) {
                       return mul(g, constant(m));
                     }}});
}

Var log_softmax_rows(const Var& a) {
  Matrix v = a->value;
  for (int i = 0; i < v.rows(); ++i) {
    const double mx = v.row(i).maxCoeff();
    const double lse = mx + std::log((v.row(i).array() - mx).exp().sum());
    v.row(i).array() -= lse;
  }
  auto n = make_node(std::move(v), {});
  if (a->requires_grad) {
    n->requires_grad = true;
    const int c = a->cols();
    n->edges.push_back({a, [w = std::weak_ptr<Node>(n), c](const Var& g) {
                          return sub(g, mul(vexp(w.lock()),
                                            broadcast_cols(rowsum(g), c)));
                        }});
  }
  return n;
}

Var softmax_rows(const Var& a) { return vexp(log_softmax_rows(a)); }

Var take_rows(const Var& a, const std::vector<int>& idx) {
  Matrix v(static_cast<int>(idx.size()), a->cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < a->rows(), "take_rows: index out of range");
    v.row(static_cast<int>(i)) = a->value.row(idx[i]);
  }
  const int nrows = a->rows();
  return make_node(std::move(v), {{a, [idx, nrows](const Var& g) {
                                     return scatter_rows(g, idx, nrows);
                                   }}});
}

Var scatter_rows(const Var& a, const std::vector<int>& idx, int nrows) {
  require(static_cast<int>(idx.size()) == a->rows(),
          "scatter_rows: index count mismatch");
  Matrix v = Matrix::Zero(nrows, a->cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < nrows, "scatter_rows: index out of range");
    v.row(idx[i]) += a->value.row(static_cast<int>(i));
  }
  return make_node(std::move(v), {{a, [idx](const Var& g) {
                                     return take_rows(g, idx);
                                   }}});
}

Var gather_cols(const Var& a, const std::vector<int>& idx) {
  require(static_cast<int>(idx.size()) == a->rows(),
          "gather_cols: one index per row required");
  Matrix v(a->rows(), 1);
  for (int i = 0; i < a->rows(); ++i) {
    require(idx[static_cast<std::size_t>(i)] >= 0 &&
                idx[static_cast<std::size_t>(i)] < a->cols(),
            "gather_cols: index out of range");
    v(i, 0) = a->value(i, idx[static_cast<std::size_t>(i)]);
  }
  const int ncols = a->cols();
  return make_node(std::move(v), {{a, [idx, ncols](const Var& g) {
                                     return scatter_cols(g, idx, ncols);
                                   }}});
}

Var scatter_cols(const Var& a, const std::vector<int>& idx, int ncols) {
  require(a->cols() == 1, "scatter_cols: input must be a column");
  require(static_cast<int>(idx.size()) == a->rows(),
          "scatter_cols: index count mismatch");
  Matrix v = Matrix::Zero(a->rows(), ncols);
  for (int i = 0; i < a->rows(); ++i) {
    v(i, idx[static_cast<std::size_t>(i)]) = a->value(i, 0);
  }
  return make_node(std::move(v), {{a, [idx](const Var& g) {
                                     return gather_cols(g, idx);
                                   }}});
}

Var col(const Var& a, int j) {
  require(j >= 0 && j < a->cols(), "col: index out of range");
  const int ncols = a->cols();
  return make_node(a->value.col(j), {{a, [j, ncols](const Var& g) {
                                        return scatter_col(g, j, ncols);
                                      }}});
}

Var scatter_col(const Var& a, int j, int ncols) {
  require(a->cols() == 1, "scatter_col: input must be a column");
  require(j >= 0 && j < ncols, "scatter_col: index out of range");
  Matrix v = Matrix::Zero(a->rows(), ncols);
  v.col(j) = a->value;
  return make_node(std::move(v),
                   {{a, [j](const Var& g) { return col(g, j); }}});
}

Var concat_cols(const Var& a, const Var& b) {
  require(a->rows() == b->rows(), "concat_cols: row count mismatch");
  Matrix v(a->rows(), a->cols() + b->cols());
  v << a->value, b->value;
  const int ca = a->cols(), cb = b->cols();
  return make_node(
      std::move(v),
      {{a, [ca](const Var& g) { return slice_cols(g, 0, ca); }},
       {b, [ca, cb](const Var& g) { return slice_cols(g, ca, cb); }}});
}

Var slice_cols(const Var& a, int start, int n) {
  require(start >= 0 && n >= 0 && start + n <= a->cols(),
          "slice_cols: range out of bounds");
  const int total = a->cols();
  return make_node(a->value.middleCols(start, n),
                   {{a, [start, total](const Var& g) {
                       return pad_cols(g, start, total);
                     }}});
}

Var pad_cols(const Var& a, int start, int total) {
  require(start >= 0 && start + a->cols() <= total, "pad_cols: out of bounds");
  Matrix v = Matrix::Zero(a->rows(), total);
  v.middleCols(start, a->cols()) = a->value;
  const int n = a->cols();
  return make_node(std::move(v), {{a, [start, n](const Var& g) {
                                     return slice_cols(g, start, n);
                                   }}});
}

Var dot(const Var& a, const Var& b) { return sum(mul(a, b)); }

Var cross_entropy_mean(const Var& logits, const std::vector<int>& labels) {
  require(logits->rows() > 0, "cross_entropy_mean: empty batch");
  require(static_cast<int>(labels.size()) == logits->rows(),
          "cross_entropy_mean: label count mismatch");
  auto picked = gather_cols(log_softmax_rows(logits), labels);
  return neg(mean(picked));
}

std::vector<Var> gradient_vars(const Var& root, const std::vector<Var>& wrt) {
  require(root->rows() == 1 && root->cols() == 1,
          "gradient_vars: root must be scalar");

  // Reachable subgraph (only through grad-requiring nodes).
  std::unordered_map<const Node*, Var> seen;
  std::vector<Var> stack{root};
  seen.emplace(root.get(), root);
  while (!stack.empty()) {
    Var n = stack.back();
    stack.pop_back();
    for (const auto& e : n->edges) {
      if (!seen.count(e.parent.get())) {
        seen.emplace(e.parent.get(), e.parent);
        stack.push_back(e.parent);
      }
    }
  }
  std::vector<Var> order;
  order.reserve(seen.size());
  for (auto& [_, v] : seen) order.push_back(v);
  std::sort(order.begin(), order.end(),
            [](const Var& x, const Var& y) { return x->seq > y->seq; });

  std::unordered_map<const Node*, Var> grad;
  grad[root.get()] = scalar(1.0);
  for (const auto& n : order) {
    auto it = grad.find(n.get());
    if (it == grad.end()) continue;  // not on a path from root
    const Var& g = it->second;
    for (const auto& e : n->edges) {
      Var contrib = e.vjp(g);
      require(contrib->rows() == e.parent->rows() &&
                  contrib->cols() == e.parent->cols(),
              "gradient_vars: vjp produced wrong shape");
      auto slot = grad.find(e.parent.get());
      if (slot == grad.end()) {
        grad.emplace(e.parent.get(), contrib);
      } else {
        slot->second = add(slot->second, contrib);
      }
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grad.find(w.get());
    if (it != grad.end() && w->requires_grad) {
      out.push_back(it->second);
    } else {
      out.push_back(constant(Matrix::Zero(w->rows(), w->cols())));
    }
  }
  return out;
}

std::vector<Matrix> gradients(const Var& root, const std::vector<Var>& wrt) {
  auto gv = gradient_vars(root, wrt);
  std::vector<Matrix> out;
  out.reserve(gv.size());
  for (auto& g : gv) out.push_back(g->value);
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace mpssl::ad
