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

#ifndef PITCHRAVE_DSP_STFT_HPP_
#define PITCHRAVE_DSP_STFT_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "pitchrave/matrix.hpp"

namespace pitchrave::dsp {

// Frame layout of a centered STFT: the signal is zero-extended to at least
// one window, reflect-padded by window/2 on both sides, and hopped by
// window/4.
struct StftShape {
  std::size_t length = 0;  // input samples
  std::size_t window = 0;
  std::size_t hop = 0;
  std::size_t bins = 0;
  std::size_t frames = 0;
};

StftShape GetStftShape(std::size_t length, std::size_t window);

// Periodic Hann window.
std::vector<double> HannWindow(std::size_t n);

// Complex spectra stored frame-major: data[frame * bins + bin].
struct ComplexSpectrogram {
  StftShape shape;
  std::vector<std::complex<double>> data;
};

ComplexSpectrogram Stft(std::span<const double> x, std::size_t window);

// Given dL/dRe + i dL/dIm for every entry of Stft(x, window), returns dL/dx.
std::vector<double> StftAdjoint(const ComplexSpectrogram& grad);

// |STFT| as a (window/2 + 1) x frames matrix.
Matrix StftMagnitude(std::span<const double> x, std::size_t window);

}  // namespace pitchrave::dsp

#endif  // PITCHRAVE_DSP_STFT_HPP_
