#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// Every op records its parents and a backward rule written in terms of the
// same differentiable ops, so gradients can themselves be differentiated
// (`GradOptions::create_graph`). The gradient penalty of a Wasserstein
// critic needs exactly that: d/dθ of a norm of d/dx.

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace seqaug::ad {

using Matrix = Eigen::MatrixXd;

class Var;

using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& grad,
                                                  const std::vector<char>& needed)>;

struct Node {
  Matrix value;
  std::vector<Var> parents;
  BackwardFn backward;
  bool requires_grad = false;
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  static Var zeros(Eigen::Index rows, Eigen::Index cols) { return Var(Matrix::Zero(rows, cols)); }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// In-place access for optimizers; only valid on leaves.
  Matrix& mutable_value() { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const { return node_->value(0, 0); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Node* node() const { return node_.get(); }

  /// A leaf copy of the value, cut from the graph.
  Var detach() const { return Var(value()); }

  static Var from_op(Matrix value, std::vector<Var> parents, BackwardFn backward);

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording for its lifetime (thread-local).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

struct GradOptions {
  /// Record the backward pass so the returned gradients are differentiable.
  bool create_graph = false;
};

/// Gradients of scalar `output` (1x1) with respect to `inputs`. Inputs the
/// output does not depend on get a zero matrix.
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, GradOptions opts = {});

// Elementwise and linear-algebra ops. Shapes must match unless noted.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var sqrt(const Var& a);
Var abs(const Var& a);
Var square(const Var& a);

/// a (m x n) + row (1 x n) broadcast over rows.
Var add_row(const Var& a, const Var& row);

Var sum(const Var& a);            ///< 1 x 1
Var mean(const Var& a);           ///< 1 x 1
Var sum_over_rows(const Var& a);  ///< 1 x n: column sums
Var sum_over_cols(const Var& a);  ///< m x 1: row sums
Var repeat_rows(const Var& row, Eigen::Index m);
Var repeat_cols(const Var& col, Eigen::Index n);
Var fill(const Var& scalar, Eigen::Index m, Eigen::Index n);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var pad_cols(const Var& a, Eigen::Index start, Eigen::Index total);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var pad_rows(const Var& a, Eigen::Index start, Eigen::Index total);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace seqaug::ad
