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

#ifndef PITCHRAVE_AD_PARAM_STORE_HPP_
#define PITCHRAVE_AD_PARAM_STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pitchrave/ad/tensor.hpp"

namespace pitchrave::ad {

// A learnable tensor plus its bookkeeping. `group` names the model part it
// belongs to ("encoder", "aux_fc", "decoder", "discriminator").
struct Param {
  std::string name;
  std::string group;
  Tensor tensor;
  bool frozen = false;
  // Adam state.
  std::vector<Real> first_moment;
  std::vector<Real> second_moment;
  std::int64_t steps = 0;
};

// Ordered, named collection of parameters. Insertion order is stable and
// defines checkpoint layout.
class ParamStore {
 public:
  // Throws UsageError on a duplicate name. The tensor is marked
  // requires_grad.
  Tensor& Add(const std::string& name, const std::string& group, Tensor tensor);

  bool Contains(const std::string& name) const;
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Tensor& Get(const std::string& name) { return at(name).tensor; }
  const Tensor& Get(const std::string& name) const { return at(name).tensor; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t NumElements() const;

  // Freeze flags are per parameter; the group helpers set every member.
  void SetFrozen(const std::string& name, bool frozen);
  void SetGroupFrozen(const std::string& group, bool frozen);
  std::vector<std::string> FrozenNames() const;
  std::vector<std::string> Groups() const;

  void ZeroGrad();

  // Deep copy (values, flags and optimizer state).
  ParamStore Clone() const;

 private:
  std::vector<Param> params_;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t refined = 0;     // elements re-estimated on a smooth piece
  std::size_t unresolved = 0;  // refinement found no kink-free step
};

struct GradCheckOptions {
  double step = 1e-5;
  // Elements whose central-difference error exceeds this get a second
  // estimate from central differences over a ladder of offsets (1e-2 down
  // to 5e-8), keeping only offsets whose evaluations share the base point's
  // BranchTrace signature and picking the one with the smallest estimated
  // truncation plus rounding error. Zero disables refinement.
  double refine_above = 0.0;
};

using ScalarFn = std::function<Tensor(Tape&)>;

// Compares backward() against finite differences for every element of
// every parameter in `params` (frozen ones included unless `skip_frozen`).
// The error of one element is |a - n| / max(|a|, |n|, 1e-8). `f` must build
// the loss from the store's current values and be deterministic.
GradCheckResult GradCheck(const ScalarFn& f, ParamStore& params, const GradCheckOptions& opt,
                          bool skip_frozen = false);
GradCheckResult GradCheck(const ScalarFn& f, std::vector<Tensor> tensors,
                          const GradCheckOptions& opt);

// Plain central differences at `step`.
inline GradCheckResult GradCheck(const ScalarFn& f, ParamStore& params, double step,
                                 bool skip_frozen = false) {
  return GradCheck(f, params, GradCheckOptions{step, 0.0}, skip_frozen);
}
inline GradCheckResult GradCheck(const ScalarFn& f, std::vector<Tensor> tensors, double step) {
  return GradCheck(f, std::move(tensors), GradCheckOptions{step, 0.0});
}

}  // namespace pitchrave::ad

#endif  // PITCHRAVE_AD_PARAM_STORE_HPP_
