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

#include "pitchrave/metrics/distance.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "pitchrave/branch_trace.hpp"
#include "pitchrave/common.hpp"
#include "pitchrave/dsp/stft.hpp"

namespace pitchrave::metrics {

namespace {

void CheckLengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw UsageError("distance: length mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
}

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void AddInto(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

void MultiscaleConfig::Validate() const {
  if (windows.empty()) throw UsageError("multiscale: empty window set");
  for (std::size_t w : windows) {
    if (w < 32 || !IsPowerOfTwo(w)) {
      throw UsageError("multiscale: window " + std::to_string(w) +
                       " must be a power of two >= 32");
    }
  }
  if (!(eps_power > 0.0) || !(eps_log > 0.0)) {
    throw UsageError("multiscale: eps values must be positive");
  }
}

double SpectralDistance(std::span<const double> x, std::span<const double> y,
                        std::size_t window, double eps, std::vector<double>* grad_y) {
  CheckLengths(x, y);
  if (!(eps > 0.0)) throw UsageError("spectral distance: eps must be positive");
  const auto sx = dsp::Stft(x, window);
  auto sy = dsp::Stft(y, window);
  double total = 0.0;
  BranchTrace* trace = BranchTrace::Active();
  for (std::size_t i = 0; i < sx.data.size(); ++i) {
    const double py = std::norm(sy.data[i]) + eps;
    const double diff = std::log(std::norm(sx.data[i]) + eps) - std::log(py);
    total += std::abs(diff);
    if (trace) trace->Note(diff);
    if (grad_y) sy.data[i] *= -Sign(diff) * 2.0 / py;
  }
  if (grad_y) *grad_y = dsp::StftAdjoint(sy);
  return total;
}

double MultiscaleSpectralDistance(std::span<const double> x, std::span<const double> y,
                                  const MultiscaleConfig& cfg, std::vector<double>* grad_y,
                                  MultiscaleTerms* terms) {
  CheckLengths(x, y);
  cfg.Validate();
  for (std::size_t w : cfg.windows) {
    if (w > x.size()) {
      throw UsageError("multiscale: window " + std::to_string(w) + " exceeds signal length " +
                       std::to_string(x.size()));
    }
  }
  if (grad_y) grad_y->assign(y.size(), 0.0);
  if (terms) *terms = {};

  double total = 0.0;
  BranchTrace* trace = BranchTrace::Active();
  for (std::size_t w : cfg.windows) {
    const auto sx = dsp::Stft(x, w);
    auto sy = dsp::Stft(y, w);
    const std::size_t n = sx.data.size();
    std::vector<double> diff(n);
    double ref_sq = 0.0;
    double diff_sq = 0.0;
    double diff_l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mx = std::abs(sx.data[i]);
      diff[i] = mx - std::abs(sy.data[i]);
      ref_sq += mx * mx;
      diff_sq += diff[i] * diff[i];
      diff_l1 += std::abs(diff[i]);
      if (trace) trace->Note(diff[i]);
    }
    if (ref_sq == 0.0) throw NumericalError("zero reference");
    const double ref_norm = std::sqrt(ref_sq);
    const double diff_norm = std::sqrt(diff_sq);
    const double frob = diff_norm / ref_norm;
    const double log_l1 = std::log(diff_l1 + cfg.eps_log);
    total += frob + log_l1;
    if (terms) {
      terms->relative_frobenius.push_back(frob);
      terms->log_l1.push_back(log_l1);
    }
    if (grad_y) {
      // dL/d|Y| then through |Y| onto the complex spectrum.
      const double frob_scale = diff_norm > 0.0 ? 1.0 / (diff_norm * ref_norm) : 0.0;
      const double l1_scale = 1.0 / (diff_l1 + cfg.eps_log);
      for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(sy.data[i]);
        const double d_mag = -diff[i] * frob_scale - Sign(diff[i]) * l1_scale;
        sy.data[i] = mag > 0.0 ? sy.data[i] * (d_mag / mag) : std::complex<double>(0.0, 0.0);
      }
      AddInto(*grad_y, dsp::StftAdjoint(sy));
    }
  }
  if (terms) terms->total = total;
  return total;
}

double KlDiagGaussian(std::span<const double> mean, std::span<const double> log_var,
                      std::vector<double>* grad_mean, std::vector<double>* grad_log_var) {
  if (mean.size() != log_var.size()) throw UsageError("kl: mean/log_var length mismatch");
  double total = 0.0;
  if (grad_mean) grad_mean->resize(mean.size());
  if (grad_log_var) grad_log_var->resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (std::isnan(mean[i]) || std::isnan(log_var[i])) throw NumericalError("kl: NaN input");
    const double var = std::exp(log_var[i]);
    total += 0.5 * (mean[i] * mean[i] + var - 1.0 - log_var[i]);
    if (grad_mean) (*grad_mean)[i] = mean[i];
    if (grad_log_var) (*grad_log_var)[i] = 0.5 * (var - 1.0);
  }
  return total;
}

}  // namespace pitchrave::metrics
