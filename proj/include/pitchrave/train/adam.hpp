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

#ifndef PITCHRAVE_TRAIN_ADAM_HPP_
#define PITCHRAVE_TRAIN_ADAM_HPP_

#include <string>
#include <vector>

#include "pitchrave/ad/param_store.hpp"

namespace pitchrave::train {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
  // Rescales the selected gradients to this global L2 norm when exceeded;
  // zero disables clipping.
  double clip_norm = 0.0;
};

// One bias-corrected Adam update of every non-frozen parameter whose group
// is listed in `groups` (all groups when empty). Moments live in the Param.
// Throws UsageError if a selected trainable parameter has no gradient and
// NumericalError on a non-finite gradient.
void AdamStep(ad::ParamStore& params, const AdamConfig& cfg,
              const std::vector<std::string>& groups = {});

}  // namespace pitchrave::train

#endif  // PITCHRAVE_TRAIN_ADAM_HPP_
