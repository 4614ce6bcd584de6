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

#include "pitchrave/ad/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace pitchrave::ad {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), Real{0}, requires_grad);
}

Tensor Tensor::Full(Shape shape, Real value, bool requires_grad) {
  auto storage = std::make_shared<Storage>();
  storage->values.assign(NumElements(shape), value);
  storage->shape = std::move(shape);
  storage->requires_grad = requires_grad;
  return Tensor(std::move(storage));
}

Tensor Tensor::FromVector(Shape shape, std::vector<Real> values, bool requires_grad) {
  if (NumElements(shape) != values.size()) {
    throw UsageError("tensor: shape " + ShapeString(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  auto storage = std::make_shared<Storage>();
  storage->shape = std::move(shape);
  storage->values = std::move(values);
  storage->requires_grad = requires_grad;
  return Tensor(std::move(storage));
}

Tensor Tensor::Scalar(Real value, bool requires_grad) {
  return FromVector({1}, {value}, requires_grad);
}

Real Tensor::item() const {
  if (size() != 1) throw UsageError("tensor: item() on non-scalar " + ShapeString(shape()));
  return data_->values[0];
}

std::span<Real> Tensor::grad() const {
  if (data_->grad.empty()) data_->grad.assign(data_->values.size(), Real{0});
  return data_->grad;
}

void Tensor::ZeroGrad() {
  if (!data_->grad.empty()) std::fill(data_->grad.begin(), data_->grad.end(), Real{0});
}

Tensor Tensor::Clone() const {
  auto storage = std::make_shared<Storage>(*data_);
  return Tensor(std::move(storage));
}

Tensor Tensor::Detach() const {
  return FromVector(shape(), data_->values, false);
}

void Tape::Record(std::span<const Tensor> inputs, Tensor& output, BackwardFn fn) {
  if (!enabled_) return;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (!any) return;
  output.set_requires_grad(true);
  nodes_.push_back({output, std::move(fn)});
}

void Backward(const Tensor& loss, Tape& tape) {
  if (loss.size() != 1) {
    throw UsageError("backward: loss must be scalar, got " + ShapeString(loss.shape()));
  }
  if (tape.empty()) throw UsageError("backward: empty tape");
  Tensor seed = loss;
  seed.grad()[0] += Real{1};
  for (auto it = tape.nodes_.rbegin(); it != tape.nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not on a path to the loss
    it->backward();
  }
  tape.Clear();
}

}  // namespace pitchrave::ad
