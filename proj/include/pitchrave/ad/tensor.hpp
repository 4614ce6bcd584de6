// Copyright 2026 The PitchRAVE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PITCHRAVE_AD_TENSOR_HPP_
#define PITCHRAVE_AD_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pitchrave/common.hpp"

namespace pitchrave::ad {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Shared handle to a dense row-major tensor. Copies alias the same storage;
// use Clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, Real value, bool requires_grad = false);
  static Tensor FromVector(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor Scalar(Real value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t dim(std::size_t axis) const { return data_->shape.at(axis); }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->values.size(); }

  std::span<Real> values() { return data_->values; }
  std::span<const Real> values() const { return data_->values; }
  Real item() const;

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool flag) { data_->requires_grad = flag; }

  bool has_grad() const { return !data_->grad.empty(); }
  // Zero-initializes the gradient buffer on first access. Like a
  // shared_ptr, a const handle still grants access to the shared buffer.
  std::span<Real> grad() const;
  void ZeroGrad();
  void ClearGrad() { data_->grad.clear(); }

  Tensor Clone() const;
  // Same values, fresh storage, no gradient tracking.
  Tensor Detach() const;

  bool SameStorage(const Tensor& other) const { return data_ == other.data_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<Real> values;
    std::vector<Real> grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Storage> data) : data_(std::move(data)) {}

  std::shared_ptr<Storage> data_;
};

// Ordered record of differentiable operations. Nodes are appended in
// execution order, so their inputs always precede them.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  // Records `fn` (which reads output.grad() and accumulates into the
  // inputs' gradients) when recording is enabled and any input requires
  // gradients. Marks the output as requiring gradients in that case.
  void Record(std::span<const Tensor> inputs, Tensor& output, BackwardFn fn);

  bool recording() const { return enabled_; }
  void set_recording(bool enabled) { enabled_ = enabled; }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void Clear() { nodes_.clear(); }

 private:
  friend void Backward(const Tensor& loss, Tape& tape);

  struct Node {
    Tensor output;
    BackwardFn backward;
  };

  bool enabled_ = true;
  std::vector<Node> nodes_;
};

// Seeds d loss / d loss = 1, runs every recorded rule in reverse order and
// clears the tape. Gradients accumulate into existing buffers; callers zero
// them between steps. Throws UsageError for non-scalar losses or an empty
// tape.
void Backward(const Tensor& loss, Tape& tape);

}  // namespace pitchrave::ad

#endif  // PITCHRAVE_AD_TENSOR_HPP_
