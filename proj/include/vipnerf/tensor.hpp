// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense 2-D tensors with tape-based reverse-mode differentiation.
//
// Every tensor is a (rows, cols) matrix of doubles; scalars are 1x1 and
// vectors are n x 1. Operations whose operands require gradients are
// appended to the tape made current by a TapeScope on the calling thread.
// Because nodes are appended as they are created, the tape is already in
// topological order and backward() is a single reverse sweep.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vipnerf::ad {

struct Shape {
  size_t rows = 0;
  size_t cols = 0;
  size_t numel() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool on_tape = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(size_t rows, size_t cols, bool requires_grad = false);
  static Tensor full(size_t rows, size_t cols, double value, bool requires_grad = false);
  static Tensor from(std::vector<double> values, size_t rows, size_t cols, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  Shape shape() const { return node_->shape; }
  size_t rows() const { return node_->shape.rows; }
  size_t cols() const { return node_->shape.cols; }
  size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Mutable access, intended for leaves (optimizer updates, loading checkpoints).
  std::span<double> mutable_values() { return node_->value; }
  double at(size_t r, size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
  /// Gradient buffer; all zeros when nothing has been accumulated yet.
  std::span<const double> grad() const;
  void zero_grad();

  /// A new leaf sharing no state with this tensor.
  Tensor detach_copy() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op_result(Shape, std::vector<double>, std::vector<Tensor>,
                               std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of non-leaf nodes created while the tape is current.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::shared_ptr<detail::Node> node);
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  const std::vector<std::shared_ptr<detail::Node>>& nodes() const { return nodes_; }

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
};

/// Makes a tape current for the calling thread; restores the previous one on exit.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Disables recording on the calling thread: results never require gradients.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Reverse sweep from a scalar root. Intermediate gradients are reset on every
/// call; leaf gradients accumulate until zero_grad().
void backward(Tape& tape, const Tensor& root);

// Low-level constructor used by the operations below.
Tensor make_op_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward_fn);

// ---- primitives -------------------------------------------------------------
// Binary elementwise ops accept b with the same shape as a, a (1, cols) row
// broadcast over a's leading dimension, or a (1, 1) scalar.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor square(const Tensor& a);
Tensor maximum(const Tensor& a, double floor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// (R, C) -> (R, 1)
Tensor sum_cols(const Tensor& a);
/// y[r, i] = sum_{j < i} a[r, j]
Tensor cumsum_exclusive(const Tensor& a);
Tensor reshape(const Tensor& a, size_t rows, size_t cols);
/// Columns [begin, end).
Tensor slice_cols(const Tensor& a, size_t begin, size_t end);
/// (R, C) * (R, 1): scales each row by its own factor.
Tensor scale_rows(const Tensor& a, const Tensor& factors);
/// (R * group, C) -> (R, C), summing consecutive blocks of rows.
Tensor group_sum_rows(const Tensor& a, size_t group);
/// Identity on values; the result is a constant, so no gradient reaches a.
Tensor stop_gradient(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

}  // namespace vipnerf::ad
