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

#include "pitchrave/dsp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include "pitchrave/common.hpp"

namespace pitchrave::dsp {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with the new-array interface
// is, provided buffers share the alignment of the planning buffers
// (guaranteed by fftw_malloc).
PlanPair GetPlans(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* real = fftw_alloc_real(n);
  auto* cplx = fftw_alloc_complex(n / 2 + 1);
  const int size = static_cast<int>(n);
  PlanPair plans{
      fftw_plan_dft_r2c_1d(size, real, cplx, FFTW_ESTIMATE),
      fftw_plan_dft_c2r_1d(size, cplx, real, FFTW_ESTIMATE | FFTW_DESTROY_INPUT)};
  fftw_free(real);
  fftw_free(cplx);
  cache.emplace(n, plans);
  return plans;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw UsageError("fft: size must be at least 2");
  const PlanPair plans = GetPlans(n);
  forward_plan_ = plans.forward;
  inverse_plan_ = plans.inverse;
  real_ = fftw_alloc_real(n);
  complex_ = fftw_alloc_complex(n / 2 + 1);
}

RealFft::~RealFft() {
  fftw_free(real_);
  fftw_free(complex_);
}

void RealFft::Forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy_n(in.begin(), n_, real_);
  auto* cplx = static_cast<fftw_complex*>(complex_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), real_, cplx);
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {cplx[k][0], cplx[k][1]};
}

void RealFft::Inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  auto* cplx = static_cast<fftw_complex*>(complex_);
  for (std::size_t k = 0; k < bins(); ++k) {
    cplx[k][0] = in[k].real();
    cplx[k][1] = in[k].imag();
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), cplx, real_);
  std::copy_n(real_, n_, out.begin());
}

}  // namespace pitchrave::dsp
