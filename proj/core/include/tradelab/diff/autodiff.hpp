#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace tradelab::diff {

using Mat = Eigen::MatrixXd;

class Var;

// Receives this node (as a Var) and the incoming gradient, returns one
// gradient per parent. Built from Var ops so that backward passes can
// themselves be recorded when higher-order gradients are requested.
using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& grad)>;

struct Node {
  Mat value;
  std::vector<Var> parents;
  BackwardFn backward;
  bool requires_grad = false;
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Mat& value() const { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const;  // value of a 1x1 Var
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return node_ != nullptr; }
  Node* node() const { return node_.get(); }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Mat value);
Var parameter(Mat value);  // leaf that gradients can be taken with respect to

// Recording switch (per thread). Inside a NoGradGuard every op yields a
// constant.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Reverse-mode gradients of a 1x1 `loss` with respect to each of `wrt`.
// Inputs that do not influence the loss get zero gradients. With
// create_graph the returned gradients are differentiable expressions.
std::vector<Var> grad(const Var& loss, const std::vector<Var>& wrt, bool create_graph = false);

// Matrix products.
Var matmul(const Var& a, const Var& b);     // a b
Var matmul_nt(const Var& a, const Var& b);  // a b^T
Var matmul_tn(const Var& a, const Var& b);  // a^T b
Var transpose(const Var& a);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var reciprocal(const Var& a);
Var square(const Var& a);
Var minimum(const Var& a, const Var& b);  // gradient routed to the selected input
// Forward clamps to [lo, hi]; backward passes the gradient through unchanged.
Var clamp_st(const Var& a, double lo, double hi);

// Broadcasting and reductions.
Var add_row(const Var& x, const Var& row);          // x [n x m] + row [1 x m]
Var sum_rows(const Var& x);                         // [1 x m] column sums
Var broadcast_rows(const Var& row, Eigen::Index n);  // [1 x m] -> [n x m]
Var row_sum(const Var& x);                          // [n x 1] row sums
Var broadcast_cols(const Var& col, Eigen::Index m);  // [n x 1] -> [n x m]
Var sum(const Var& x);                              // 1x1
Var mean(const Var& x);                             // 1x1
Var broadcast_scalar(const Var& s, Eigen::Index rows, Eigen::Index cols);

// Column blocks.
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count);
Var pad_cols(const Var& x, Eigen::Index start, Eigen::Index total);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace tradelab::diff
