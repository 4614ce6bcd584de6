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

#ifndef PITCHRAVE_DSP_FFT_HPP_
#define PITCHRAVE_DSP_FFT_HPP_

#include <complex>
#include <cstddef>
#include <span>

namespace pitchrave::dsp {

// Real-input FFT of a fixed size backed by FFTW. Each instance owns its
// scratch buffers, so one instance must not be shared between threads;
// constructing one is cheap once the plan for `n` exists.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // X_k = sum_n x_n exp(-2 pi i k n / N), k = 0 .. N/2.
  void Forward(std::span<const double> in, std::span<std::complex<double>> out);

  // Unnormalized half-complex inverse: x_n = sum over the Hermitian extension.
  void Inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  void* complex_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace pitchrave::dsp

#endif  // PITCHRAVE_DSP_FFT_HPP_
