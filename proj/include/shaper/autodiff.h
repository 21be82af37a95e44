// Copyright 2026 The Shaper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPER_AUTODIFF_H_
#define SHAPER_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shaper/tensor.h"

namespace shaper {

// A trainable tensor. Gradients accumulate into `grad`; the prefix block that
// received gradient since the last ZeroGrad() is tracked so the optimizer can
// leave untouched regions of shared weights bit-identical.
struct Parameter {
  Parameter() = default;
  Parameter(std::string param_name, Tensor init);

  std::string name;
  Tensor value;
  Tensor grad;
  std::size_t touched_rows = 0;
  std::size_t touched_cols = 0;

  std::size_t rows() const { return value.rows(); }
  std::size_t cols() const { return value.cols(); }

  void ZeroGrad();
  void MarkTouched(std::size_t rows, std::size_t cols);
  void MarkAllTouched() { MarkTouched(rows(), cols()); }
  bool touched() const { return touched_rows > 0 && touched_cols > 0; }
};

class Tape;

// Handle to a value recorded on a Tape. Valid while the tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Operations are appended in execution order, so the node
// list is already topologically sorted; Backward() walks it once in reverse.
// Not thread-safe: one tape per forward/backward pass.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var Constant(Tensor value);
  // Leaf that requires grad (when the tape has gradients enabled).
  Var Variable(Tensor value);

  // Seeds d(loss)/d(loss) = 1 and propagates to every recorded node and to
  // the Parameters touched by the recorded operations.
  void Backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  std::size_t recorded_ops() const { return recorded_ops_; }

  // Used by operation implementations.
  Var Record(Tensor value, bool requires_grad, BackwardFn fn,
             const char* op_name);
  const Tensor& ValueOf(std::size_t id) const { return nodes_[id].value; }
  const Tensor& GradOf(std::size_t id) const { return nodes_[id].grad; }
  bool RequiresGrad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Mutable gradient of an input node, allocated on first use.
  Tensor& MutableGrad(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;
  bool backward_done_ = false;
  std::size_t recorded_ops_ = 0;
};

// Differentiable primitives. All matrices are 2-D row-major; a tensor of
// dims [n] is a column vector.
namespace ad {

Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Scale(Var a, double factor);
Var Sum(Var a);
Var Gelu(Var a);
Var SoftmaxRows(Var a);

// y = x * W[:out, :in]^T + b[:out] where in = x.cols(). Uses the top-left
// block of the stored weight in place; only that block receives gradient.
Var Linear(Var x, Parameter& weight, Parameter* bias, std::size_t out);

// Row-wise layer norm over x.cols() features using the first x.cols()
// entries of gamma and beta.
Var LayerNorm(Var x, Parameter& gamma, Parameter& beta, double eps = 1e-12);

// Rows of `table` selected by ids.
Var Embedding(Tape& tape, Parameter& table, std::span<const int> ids);

// Multi-head scaled dot-product self-attention over `batch` sequences of
// length `seq`. q, k, v are (batch*seq) x width; heads split the width.
Var Attention(Var q, Var k, Var v, std::size_t batch, std::size_t seq,
              std::size_t heads);

Var GatherRows(Var x, std::span<const std::size_t> rows);

// Mean softmax cross-entropy over rows whose label is >= 0. Rows labelled -1
// are ignored. Throws a data error if no row is labelled.
Var CrossEntropy(Var logits, std::span<const int> labels);

}  // namespace ad

}  // namespace shaper

#endif  // SHAPER_AUTODIFF_H_
