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

#ifndef PITCHRAVE_METRICS_DISTANCE_HPP_
#define PITCHRAVE_METRICS_DISTANCE_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace pitchrave::metrics {

struct MultiscaleConfig {
  // STFT window lengths; each >= 32 and a power of two. Hop is window / 4.
  std::vector<std::size_t> windows = {256, 128, 64};
  // Floor inside the log power spectra of the single-scale distance.
  double eps_power = 1e-7;
  // Floor inside the log of the L1 term, keeping the distance finite at x == y.
  double eps_log = 1e-7;

  static MultiscaleConfig FullScale() { return {{2048, 1024, 512, 256, 128, 64}, 1e-7, 1e-7}; }
  static MultiscaleConfig Toy() { return {}; }

  // Throws UsageError when an invariant is violated.
  void Validate() const;
};

// sum over bins and frames of |log(|X|^2 + eps) - log(|Y|^2 + eps)|.
// When `grad_y` is non-null it receives d/dy.
double SpectralDistance(std::span<const double> x, std::span<const double> y,
                        std::size_t window, double eps,
                        std::vector<double>* grad_y = nullptr);

struct MultiscaleTerms {
  std::vector<double> relative_frobenius;  // ||X - Y||_F / ||X||_F per window
  std::vector<double> log_l1;              // log(||X - Y||_1 + eps_log) per window
  double total = 0.0;
};

// Multiscale spectral distance between magnitude spectrograms:
//   sum_n ||X_n - Y_n||_F / ||X_n||_F + log(||X_n - Y_n||_1 + eps_log).
// Not symmetric: x is the reference. Throws NumericalError("zero reference")
// when x is all zero.
double MultiscaleSpectralDistance(std::span<const double> x, std::span<const double> y,
                                  const MultiscaleConfig& cfg,
                                  std::vector<double>* grad_y = nullptr,
                                  MultiscaleTerms* terms = nullptr);

// KL(N(mean, exp(log_var)) || N(0, I)) summed over elements.
double KlDiagGaussian(std::span<const double> mean, std::span<const double> log_var,
                      std::vector<double>* grad_mean = nullptr,
                      std::vector<double>* grad_log_var = nullptr);

}  // namespace pitchrave::metrics

#endif  // PITCHRAVE_METRICS_DISTANCE_HPP_
