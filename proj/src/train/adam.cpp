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

#include "pitchrave/train/adam.hpp"

#include <algorithm>
#include <cmath>

#include "pitchrave/common.hpp"

namespace pitchrave::train {

void AdamStep(ad::ParamStore& params, const AdamConfig& cfg,
              const std::vector<std::string>& groups) {
  if (!(cfg.lr >= 0.0) || cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 ||
      cfg.beta2 >= 1.0 || !(cfg.eps > 0.0)) {
    throw UsageError("adam: invalid hyperparameters");
  }
  auto selected = [&groups](const ad::Param& p) {
    return !p.frozen &&
           (groups.empty() || std::find(groups.begin(), groups.end(), p.group) != groups.end());
  };

  double norm_sq = 0.0;
  for (const ad::Param& p : params.params()) {
    if (!selected(p)) continue;
    if (!p.tensor.has_grad()) throw UsageError("adam: parameter '" + p.name + "' has no gradient");
    for (Real g : p.tensor.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericalError("adam: non-finite gradient in '" + p.name + "'");
      }
      norm_sq += static_cast<double>(g) * g;
    }
  }
  double scale = 1.0;
  if (cfg.clip_norm > 0.0 && std::sqrt(norm_sq) > cfg.clip_norm) {
    scale = cfg.clip_norm / std::sqrt(norm_sq);
  }

  for (ad::Param& p : params.params()) {
    if (!selected(p)) continue;
    const std::size_t n = p.tensor.size();
    if (p.first_moment.size() != n) p.first_moment.assign(n, Real(0));
    if (p.second_moment.size() != n) p.second_moment.assign(n, Real(0));
    ++p.steps;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.steps));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.steps));
    auto w = p.tensor.values();
    const auto g = p.tensor.grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = scale * g[i];
      const double m = cfg.beta1 * p.first_moment[i] + (1.0 - cfg.beta1) * gi;
      const double v = cfg.beta2 * p.second_moment[i] + (1.0 - cfg.beta2) * gi * gi;
      p.first_moment[i] = static_cast<Real>(m);
      p.second_moment[i] = static_cast<Real>(v);
      w[i] -= static_cast<Real>(cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps));
    }
  }
}

}  // namespace pitchrave::train
