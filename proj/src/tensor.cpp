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

#include "hgi/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "hgi/error.hpp"

namespace hgi {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) +
                         " values, got " + std::to_string(data.size()));
  }
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

detail::TensorImpl& Tensor::impl() const {
  if (!impl_) throw ContractError("use of an undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<const double> Tensor::values() const { return impl().data; }

std::span<double> Tensor::mutable_values() {
  if (!impl().is_leaf) {
    throw ContractError("in-place write to a recorded (non-leaf) tensor");
  }
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw DimensionError("index rank mismatch for shape " + shape_str(s));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw DimensionError("index out of range");
    flat = flat * s[axis] + i;
    ++axis;
  }
  return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!impl().is_leaf) {
    throw ContractError("requires_grad can only be set on leaves");
  }
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return impl().is_leaf; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }

std::vector<double> Tensor::grad() const {
  const auto& g = impl().grad;
  if (g.empty()) return std::vector<double>(impl_->data.size(), 0.0);
  return g;
}

void Tensor::zero_grad() { impl().grad.clear(); }

Tensor Tensor::detach() const { return Tensor(shape(), impl().data, false); }

// --- tape ------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() noexcept { return g_active_tape; }

void Tape::record(std::shared_ptr<detail::TensorImpl> out, BackwardFn fn) {
  entries_.push_back(Entry{std::move(out), std::move(fn)});
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : "[]"));
  }
  Tape* tape = Tape::active();
  if (tape == nullptr) {
    throw ContractError("backward() called without an active tape");
  }
  if (!loss.requires_grad()) {
    throw ContractError("loss does not depend on any requires-grad tensor");
  }
  auto& seed = loss.impl().grad;
  seed.assign(1, 0.0);
  seed[0] += 1.0;

  auto& entries = tape->entries_;
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (!it->output->grad.empty()) it->fn(*it->output);
    // Intermediate gradients are dead once propagated.
    it->output->grad.clear();
    it->output->grad.shrink_to_fit();
    it->fn = nullptr;
  }
  entries.clear();
}

namespace detail {

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

bool should_record(const std::vector<Tensor>& inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor& t : inputs) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

Tensor make_result(Shape shape, std::vector<double> values, bool record,
                   Tape::BackwardFn fn) {
  Tensor out(std::move(shape), std::move(values), false);
  if (record) {
    auto& impl = out.impl();
    impl.requires_grad = true;
    impl.is_leaf = false;
    Tape::active()->record(out.impl_ptr(), std::move(fn));
  }
  return out;
}

std::vector<double>& grad_buffer(const Tensor& t) {
  auto& impl = t.impl();
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0.0);
  return impl.grad;
}

}  // namespace detail
}  // namespace hgi
