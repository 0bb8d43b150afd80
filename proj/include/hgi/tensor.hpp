// Copyright 2026 The hginet-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense row-major float64 tensors with tape-based reverse-mode
// differentiation.
//
// A Tensor is a cheap handle; copies share storage. Operations never mutate
// their inputs. When a Tape is active on the calling thread and any input
// requires a gradient, the operation appends a backward closure to the tape;
// otherwise nothing is recorded and the result is a plain constant.
//
//   hgi::Tape tape;
//   auto loss = hgi::sum(hgi::mul(x, x));
//   hgi::backward(loss);          // x.grad() == 2x
//
// A tape belongs to the thread that created it.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hgi {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  bool is_leaf = true;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  // Only leaves may be written in place; results of recorded operations are
  // immutable because their backward closures may read them.
  std::span<double> mutable_values();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;
  bool has_grad() const;
  // Zeros when no gradient has arrived yet.
  std::vector<double> grad() const;
  void zero_grad();

  // A new leaf holding a copy of the values.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const noexcept {
    return impl_ == other.impl_;
  }

  detail::TensorImpl& impl() const;
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Ordered record of executed differentiable operations. Constructing a Tape
// makes it the active tape of the current thread until it is destroyed; tapes
// nest. Replaying the record in reverse execution order is a valid
// topological order, so backward() needs no graph search.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;

  std::size_t size() const noexcept { return entries_.size(); }
  void clear() noexcept { entries_.clear(); }

  using BackwardFn = std::function<void(const detail::TensorImpl& out)>;
  void record(std::shared_ptr<detail::TensorImpl> out, BackwardFn fn);

 private:
  friend void backward(const Tensor& loss);

  struct Entry {
    std::shared_ptr<detail::TensorImpl> output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  Tape* previous_;
};

// Propagates d(loss)/d(leaf) into every requires-grad leaf reached from
// `loss`. Gradients accumulate; call zero_grad() between steps. Consumes the
// active tape.
void backward(const Tensor& loss);

namespace detail {

// True when the active tape should record an operation over these inputs.
bool should_record(std::initializer_list<const Tensor*> inputs);
bool should_record(const std::vector<Tensor>& inputs);

// Wraps `values` into a result tensor; records `fn` when `record` is set.
Tensor make_result(Shape shape, std::vector<double> values, bool record,
                   Tape::BackwardFn fn);

// Gradient accumulator of `t`, allocated (zero-filled) on first use.
std::vector<double>& grad_buffer(const Tensor& t);

}  // namespace detail

// --- elementwise -----------------------------------------------------------
// Binary ops accept identical shapes, or a right operand that broadcasts into
// the left one (same rank, every extent equal or 1), or a one-element right
// operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
Tensor pow_scalar(const Tensor& x, double p);
Tensor neg(const Tensor& x);
// c - x
Tensor rsub_scalar(const Tensor& x, double c);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
// tanh approximation
Tensor gelu(const Tensor& x);
// Gradient passes only where lo < x < hi.
Tensor clamp(const Tensor& x, double lo, double hi);

// --- reductions ------------------------------------------------------------
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_axis(const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor mean_axis(const Tensor& x, std::size_t axis, bool keepdim = false);
// Σ weights[i]·terms[i] over one-element tensors, accumulated in extended
// precision so the result is rounded once.
Tensor weighted_sum(const std::vector<Tensor>& terms,
                    const std::vector<double>& weights);

// --- layout ----------------------------------------------------------------
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
Tensor transpose_last2(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length);
// Views `x` as rows of its last extent; output row i is input row rows[i].
// Output shape is `leading` followed by the row length. Rows may repeat.
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows,
                   Shape leading);

// --- linear algebra --------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);  // [m×k]·[k×n]
Tensor bmm(const Tensor& a, const Tensor& b);     // [B×m×k]·[B×k×n]
// x[…×in]·w[in×out] (+ bias[out])
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});

// Softmax over the trailing extent, max-subtracted.
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// --- image ops -------------------------------------------------------------
// Cross-correlation. x: B×C×H×W, kernel: C'×C×k×k with odd square k,
// bias: C' or undefined.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding);
// align_corners=false: src = (dst + 0.5)·(in/out) − 0.5, clamped.
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);
// B×C·r²×H×W → B×C×rH×rW with out[b,c,rh+i,rw+j] = in[b,c·r²+i·r+j,h,w].
Tensor pixel_shuffle(const Tensor& x, std::size_t r);
Tensor pixel_unshuffle(const Tensor& x, std::size_t r);

struct BatchNormState {
  Tensor running_mean;  // C
  Tensor running_var;   // C, unbiased estimate
  double momentum = 0.1;
  double eps = 1e-5;
};

// Training mode normalizes with batch statistics and updates `state`;
// inference mode uses the running statistics.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, bool training);

}  // namespace hgi
