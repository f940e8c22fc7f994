// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/tensor.hpp"

#include <cmath>

#include "vipnerf/error.hpp"
#include "vipnerf/kernels.hpp"

namespace vipnerf::ad {

namespace {

thread_local Tape* current_tape = nullptr;
thread_local bool no_grad = false;

using detail::Node;

enum class Broadcast { None, Row, Scalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(b.shape()) + " onto " +
                   to_string(a.shape()));
}

size_t b_index(Broadcast kind, size_t i, size_t cols) {
  switch (kind) {
    case Broadcast::None: return i;
    case Broadcast::Row: return i % cols;
    case Broadcast::Scalar: return 0;
  }
  return 0;
}

template <typename Fn>
Tensor unary(const Tensor& a, Fn fn, std::function<void(Node&)> backward_fn) {
  std::vector<double> out(a.numel());
  const auto in = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return make_op_result(a.shape(), std::move(out), {a}, std::move(backward_fn));
}

double stable_softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(Shape shape) {
  return "(" + std::to_string(shape.rows) + ", " + std::to_string(shape.cols) + ")";
}

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(size_t rows, size_t cols, bool requires_grad) { return full(rows, cols, 0.0, requires_grad); }

Tensor Tensor::full(size_t rows, size_t cols, double value, bool requires_grad) {
  return from(std::vector<double>(rows * cols, value), rows, cols, requires_grad);
}

Tensor Tensor::from(std::vector<double> values, size_t rows, size_t cols, bool requires_grad) {
  if (values.size() != rows * cols) {
    throw ShapeError("tensor data has " + std::to_string(values.size()) + " elements, shape " +
                     to_string({rows, cols}) + " needs " + std::to_string(rows * cols));
  }
  auto node = std::make_shared<Node>();
  node->shape = {rows, cols};
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({value}, 1, 1, requires_grad); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach_copy() const { return from(node_->value, rows(), cols(), false); }

// ---- tape -------------------------------------------------------------------

void Tape::record(std::shared_ptr<detail::Node> node) {
  node->on_tape = true;
  nodes_.push_back(std::move(node));
}

TapeScope::TapeScope(Tape& tape) : previous_(current_tape) { current_tape = &tape; }
TapeScope::~TapeScope() { current_tape = previous_; }

NoGradScope::NoGradScope() : previous_(no_grad) { no_grad = true; }
NoGradScope::~NoGradScope() { no_grad = previous_; }

bool grad_enabled() { return !no_grad; }

Tensor make_op_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(value);
  bool needs_grad = false;
  if (!no_grad) {
    for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
  }
  if (needs_grad) {
    if (current_tape == nullptr) {
      throw std::logic_error("operation on gradient-requiring tensors outside a TapeScope");
    }
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
    current_tape->record(node);
  }
  return Tensor(std::move(node));
}

void backward(Tape& tape, const Tensor& root) {
  if (!root.defined() || root.numel() != 1) {
    throw ShapeError("backward requires a scalar root, got " +
                     (root.defined() ? to_string(root.shape()) : std::string("undefined")));
  }
  if (!root.requires_grad()) return;
  for (const auto& node : tape.nodes()) node->grad.clear();
  root.node()->ensure_grad()[0] += 1.0;
  const auto& nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    Node& node = **it;
    if (node.grad.empty() || !node.backward_fn) continue;
    node.backward_fn(node);
  }
}

// ---- primitives -------------------------------------------------------------

namespace {

// Accumulates g into a parent whose shape may have been broadcast.
void accumulate_broadcast(Node& parent, Broadcast kind, std::span<const double> g, size_t cols, double sign) {
  if (!parent.requires_grad) return;
  auto& pg = parent.ensure_grad();
  for (size_t i = 0; i < g.size(); ++i) pg[b_index(kind, i, cols)] += sign * g[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("add", a, b);
  const size_t cols = a.cols();
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[b_index(kind, i, cols)];
  return make_op_result(a.shape(), std::move(out), {a, b}, [kind, cols](Node& self) {
    accumulate_broadcast(*self.parents[0], Broadcast::None, self.grad, cols, 1.0);
    accumulate_broadcast(*self.parents[1], kind, self.grad, cols, 1.0);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("sub", a, b);
  const size_t cols = a.cols();
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[b_index(kind, i, cols)];
  return make_op_result(a.shape(), std::move(out), {a, b}, [kind, cols](Node& self) {
    accumulate_broadcast(*self.parents[0], Broadcast::None, self.grad, cols, 1.0);
    accumulate_broadcast(*self.parents[1], kind, self.grad, cols, -1.0);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("mul", a, b);
  const size_t cols = a.cols();
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[b_index(kind, i, cols)];
  return make_op_result(a.shape(), std::move(out), {a, b}, [kind, cols](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * pb.value[b_index(kind, i, cols)];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) gb[b_index(kind, i, cols)] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, [offset](double x) { return x + offset; }, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const kernels::GemmDims dims{a.rows(), b.cols(), a.cols()};
  std::vector<double> out(dims.m * dims.n);
  kernels::gemm(false, false, dims, a.values(), b.values(), out, false);
  return make_op_result({dims.m, dims.n}, std::move(out), {a, b}, [dims](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      // dA (m x k) += dC (m x n) * B^T
      kernels::gemm(false, true, {dims.m, dims.k, dims.n}, self.grad, pb.value, pa.ensure_grad(), true);
    }
    if (pb.requires_grad) {
      // dB (k x n) += A^T * dC
      kernels::gemm(true, false, {dims.k, dims.n, dims.m}, pa.value, self.grad, pb.ensure_grad(), true);
    }
  });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i];
  });
}

Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value " + std::to_string(v));
  }
  return unary(a, [](double x) { return std::log(x); }, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / p.value[i];
  });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) {
      if (p.value[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, stable_sigmoid, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor softplus(const Tensor& a) {
  return unary(a, stable_softplus, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * stable_sigmoid(p.value[i]);
  });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * p.value[i] * self.grad[i];
  });
}

Tensor maximum(const Tensor& a, double floor) {
  return unary(a, [floor](double x) { return x > floor ? x : floor; }, [floor](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) {
      if (p.value[i] > floor) g[i] += self.grad[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_op_result({1, 1}, {total}, {a}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_cols(const Tensor& a) {
  const size_t rows = a.rows();
  const size_t cols = a.cols();
  std::vector<double> out(rows, 0.0);
  const auto v = a.values();
  for (size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += v[r * cols + c];
    out[r] = acc;
  }
  return make_op_result({rows, 1}, std::move(out), {a}, [rows, cols](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r];
    }
  });
}

Tensor cumsum_exclusive(const Tensor& a) {
  const size_t rows = a.rows();
  const size_t cols = a.cols();
  std::vector<double> out(a.numel());
  const auto v = a.values();
  for (size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = acc;
      acc += v[r * cols + c];
    }
  }
  return make_op_result(a.shape(), std::move(out), {a}, [rows, cols](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (size_t c = cols; c-- > 0;) {
        g[r * cols + c] += acc;
        acc += self.grad[r * cols + c];
      }
    }
  });
}

Tensor reshape(const Tensor& a, size_t rows, size_t cols) {
  if (rows * cols != a.numel()) {
    throw ShapeError("reshape: " + to_string(a.shape()) + " -> " + to_string({rows, cols}));
  }
  return make_op_result({rows, cols}, std::vector<double>(a.values().begin(), a.values().end()), {a},
                        [](Node& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

Tensor slice_cols(const Tensor& a, size_t begin, size_t end) {
  if (begin >= end || end > a.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                     to_string(a.shape()));
  }
  const size_t rows = a.rows();
  const size_t cols = a.cols();
  const size_t width = end - begin;
  std::vector<double> out(rows * width);
  const auto v = a.values();
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < width; ++c) out[r * width + c] = v[r * cols + begin + c];
  }
  return make_op_result({rows, width}, std::move(out), {a}, [rows, cols, begin, width](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < width; ++c) g[r * cols + begin + c] += self.grad[r * width + c];
    }
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& factors) {
  if (factors.rows() != a.rows() || factors.cols() != 1) {
    throw ShapeError("scale_rows: factors " + to_string(factors.shape()) + " for " + to_string(a.shape()));
  }
  const size_t rows = a.rows();
  const size_t cols = a.cols();
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto fv = factors.values();
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] * fv[r];
  }
  return make_op_result(a.shape(), std::move(out), {a, factors}, [rows, cols](Node& self) {
    Node& pa = *self.parents[0];
    Node& pf = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r * cols + c] * pf.value[r];
      }
    }
    if (pf.requires_grad) {
      auto& g = pf.ensure_grad();
      for (size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (size_t c = 0; c < cols; ++c) acc += self.grad[r * cols + c] * pa.value[r * cols + c];
        g[r] += acc;
      }
    }
  });
}

Tensor group_sum_rows(const Tensor& a, size_t group) {
  if (group == 0 || a.rows() % group != 0) {
    throw ShapeError("group_sum_rows: " + std::to_string(a.rows()) + " rows not divisible by " +
                     std::to_string(group));
  }
  const size_t out_rows = a.rows() / group;
  const size_t cols = a.cols();
  std::vector<double> out(out_rows * cols, 0.0);
  const auto v = a.values();
  for (size_t r = 0; r < out_rows; ++r) {
    for (size_t k = 0; k < group; ++k) {
      for (size_t c = 0; c < cols; ++c) out[r * cols + c] += v[(r * group + k) * cols + c];
    }
  }
  return make_op_result({out_rows, cols}, std::move(out), {a}, [out_rows, group, cols](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (size_t r = 0; r < out_rows; ++r) {
      for (size_t k = 0; k < group; ++k) {
        for (size_t c = 0; c < cols; ++c) g[(r * group + k) * cols + c] += self.grad[r * cols + c];
      }
    }
  });
}

Tensor stop_gradient(const Tensor& a) { return a.detach_copy(); }

}  // namespace vipnerf::ad
