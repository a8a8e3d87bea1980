#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace mpssl::ad {

using Matrix = Eigen::MatrixXd;

class Node;
using Var = std::shared_ptr<Node>;

// One backward edge: how the gradient at this node contributes to `parent`.
// The contribution is built out of graph ops, so gradients are themselves
// differentiable and second-order backward works unchanged.
struct Edge {
  Var parent;
  std::function<Var(const Var& upstream)> vjp;
};

class Node {
 public:
  Matrix value;
  bool requires_grad = false;
  std::vector<Edge> edges;
  std::uint64_t seq = 0;

  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
  double scalar_value() const;
};

// ---- construction ----
Var constant(Matrix v);
Var scalar(double s);  // 1x1 constant
Var leaf(Matrix v);    // trainable: requires_grad = true
Var detach(const Var& a);

// ---- arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var mul(const Var& a, const Var& b);  // elementwise
Var div(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);     // A B
Var matmul_nt(const Var& a, const Var& b);  // A B^T
Var matmul_tn(const Var& a, const Var& b);  // A^T B
Var transpose(const Var& a);

// ---- reductions & broadcasts ----
Var sum(const Var& a);     // 1x1
Var mean(const Var& a);    // 1x1
Var rowsum(const Var& a);  // r x 1
Var colsum(const Var& a);  // 1 x c
Var broadcast_scalar(const Var& a, int rows, int cols);  // 1x1 -> r x c
Var broadcast_cols(const Var& a, int cols);              // r x 1 -> r x c
Var broadcast_rows(const Var& a, int rows);              // 1 x c -> r x c

// ---- elementwise nonlinearities ----
Var vexp(const Var& a);
Var vlog(const Var& a);
Var vsqrt(const Var& a);
Var vabs(const Var& a);
Var clamp(const Var& a, double lo, double hi);
Var max_scalar(const Var& a, double s);
Var leaky_relu(const Var& a, double slope);
Var log_softmax_rows(const Var& a);
Var softmax_rows(const Var& a);

// ---- indexing / shaping ----
Var take_rows(const Var& a, const std::vector<int>& idx);
Var scatter_rows(const Var& a, const std::vector<int>& idx, int nrows);
// picks a[i, idx[i]] for each row -> r x 1
Var gather_cols(const Var& a, const std::vector<int>& idx);
Var scatter_cols(const Var& a, const std::vector<int>& idx, int ncols);
Var col(const Var& a, int j);                 // r x 1
Var scatter_col(const Var& a, int j, int ncols);
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, int start, int n);
Var pad_cols(const Var& a, int start, int total);

// ---- composites ----
Var dot(const Var& a, const Var& b);  // sum(a .* b), 1x1
// Mean cross-entropy of row-wise logits against integer labels.
Var cross_entropy_mean(const Var& logits, const std::vector<int>& labels);

// ---- backward ----
// d(root)/d(wrt[i]) for a 1x1 root. Entries root does not depend on come back
// as zero matrices. The returned grads are graph nodes, so differentiating
// them again (second-order) is just another gradients() call.
std::vector<Var> gradient_vars(const Var& root, const std::vector<Var>& wrt);
std::vector<Matrix> gradients(const Var& root, const std::vector<Var>& wrt);

bool all_finite(const Matrix& m);

}  // namespace mpssl::ad
