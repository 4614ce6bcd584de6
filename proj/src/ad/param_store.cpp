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

#include "pitchrave/ad/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "pitchrave/branch_trace.hpp"

namespace pitchrave::ad {

Tensor& ParamStore::Add(const std::string& name, const std::string& group, Tensor tensor) {
  if (Contains(name)) throw UsageError("param store: duplicate parameter " + name);
  tensor.set_requires_grad(true);
  Param param;
  param.name = name;
  param.group = group;
  param.tensor = std::move(tensor);
  params_.push_back(std::move(param));
  return params_.back().tensor;
}

bool ParamStore::Contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Param& p) { return p.name == name; });
}

Param& ParamStore::at(const std::string& name) {
  for (Param& p : params_) {
    if (p.name == name) return p;
  }
  throw UsageError("param store: no parameter named " + name);
}

const Param& ParamStore::at(const std::string& name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

std::size_t ParamStore::NumElements() const {
  std::size_t n = 0;
  for (const Param& p : params_) n += p.tensor.size();
  return n;
}

void ParamStore::SetFrozen(const std::string& name, bool frozen) { at(name).frozen = frozen; }

void ParamStore::SetGroupFrozen(const std::string& group, bool frozen) {
  for (Param& p : params_) {
    if (p.group == group) p.frozen = frozen;
  }
}

std::vector<std::string> ParamStore::FrozenNames() const {
  std::vector<std::string> out;
  for (const Param& p : params_) {
    if (p.frozen) out.push_back(p.name);
  }
  return out;
}

std::vector<std::string> ParamStore::Groups() const {
  std::vector<std::string> out;
  for (const Param& p : params_) {
    if (std::find(out.begin(), out.end(), p.group) == out.end()) out.push_back(p.group);
  }
  return out;
}

void ParamStore::ZeroGrad() {
  for (Param& p : params_) p.tensor.ZeroGrad();
}

ParamStore ParamStore::Clone() const {
  ParamStore out;
  for (const Param& p : params_) {
    Param copy = p;
    copy.tensor = p.tensor.Clone();
    out.params_.push_back(std::move(copy));
  }
  return out;
}

namespace {

double RelativeError(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

struct Evaluation {
  double value;
  std::uint64_t signature;
};

Evaluation Evaluate(const ScalarFn& f, Tape& quiet) {
  BranchTrace trace;
  const double value = f(quiet).item();
  return {value, trace.signature()};
}

// Derivative of f along element `v` from central differences that stay on
// the base point's smooth piece. Offsets halve and decimate from 1e-2 down
// to 5e-8; for each usable pair (s, s/2) the error of the s/2 estimate is
// taken as its truncation part |c_s - c_{s/2}| / 3 plus the rounding part
// eps |f| / (s/2), and the estimate with the smallest bound wins. Returns
// nullopt when no pair is usable.
std::optional<double> SmoothPieceDerivative(const ScalarFn& f, Tape& quiet, Real& v,
                                            std::uint64_t base_signature, double base_value) {
  const Real original = v;
  std::vector<double> offsets;
  for (double s = 1e-2; s > 1e-8; s /= 10) {
    offsets.push_back(s);
    offsets.push_back(s / 2);
  }
  std::vector<std::optional<double>> central(offsets.size());
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    v = original + static_cast<Real>(offsets[j]);
    const Evaluation plus = Evaluate(f, quiet);
    v = original - static_cast<Real>(offsets[j]);
    const Evaluation minus = Evaluate(f, quiet);
    v = original;
    if (plus.signature == base_signature && minus.signature == base_signature) {
      // Offsets as actually represented, in case Real is float.
      const double h = (static_cast<double>(static_cast<Real>(original + offsets[j])) -
                        static_cast<double>(static_cast<Real>(original - offsets[j]))) / 2;
      central[j] = (plus.value - minus.value) / (2 * h);
    }
  }
  const double rounding = std::numeric_limits<Real>::epsilon() * std::abs(base_value);
  std::optional<double> best;
  double best_bound = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < offsets.size(); ++j) {
    // Only pairs exactly a factor of two apart.
    if (!central[j] || !central[j + 1] || offsets[j] / offsets[j + 1] > 2.5) continue;
    const double bound = std::abs(*central[j] - *central[j + 1]) / 3 + rounding / offsets[j + 1];
    if (bound < best_bound) {
      best_bound = bound;
      best = central[j + 1];
    }
  }
  return best;
}

}  // namespace

GradCheckResult GradCheck(const ScalarFn& f, std::vector<Tensor> tensors,
                          const GradCheckOptions& opt) {
  const double step = opt.step;
  if (!(step > 0.0)) throw UsageError("grad_check: step must be positive");
  if (opt.refine_above < 0.0) throw UsageError("grad_check: refine_above must be >= 0");
  for (Tensor& t : tensors) {
    t.set_requires_grad(true);
    t.ZeroGrad();
  }
  {
    Tape tape;
    Tensor loss = f(tape);
    Backward(loss, tape);
  }
  std::vector<std::vector<Real>> analytic;
  for (Tensor& t : tensors) analytic.emplace_back(t.grad().begin(), t.grad().end());

  Tape quiet;
  quiet.set_recording(false);
  const Evaluation base = Evaluate(f, quiet);
  GradCheckResult result;
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    auto values = tensors[p].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real original = values[i];
      values[i] = original + static_cast<Real>(step);
      const double plus = f(quiet).item();
      values[i] = original - static_cast<Real>(step);
      const double minus = f(quiet).item();
      values[i] = original;
      double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[p][i];
      double err = RelativeError(a, numeric);
      if (opt.refine_above > 0.0 && err > opt.refine_above) {
        ++result.refined;
        if (const auto d = SmoothPieceDerivative(f, quiet, values[i], base.signature, base.value)) {
          numeric = *d;
          err = RelativeError(a, numeric);
        } else {
          ++result.unresolved;
        }
      }
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = err;
        result.worst_index = i;
        result.worst_param = std::to_string(p);
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult GradCheck(const ScalarFn& f, ParamStore& params, const GradCheckOptions& opt,
                          bool skip_frozen) {
  std::vector<Tensor> tensors;
  std::vector<std::string> names;
  for (Param& p : params.params()) {
    if (skip_frozen && p.frozen) continue;
    tensors.push_back(p.tensor);
    names.push_back(p.name);
  }
  GradCheckResult result = GradCheck(f, tensors, opt);
  if (!names.empty() && result.checked > 0) {
    result.worst_param = names[std::stoul(result.worst_param)];
  }
  return result;
}

}  // namespace pitchrave::ad
