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

#include "pitchrave/dsp/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pitchrave/common.hpp"
#include "pitchrave/dsp/fft.hpp"

namespace pitchrave::dsp {

namespace {

// Maps a position in the reflect-padded signal onto the (zero-extended)
// input of length `len`.
std::size_t ReflectIndex(std::ptrdiff_t j, std::size_t len) {
  const auto n = static_cast<std::ptrdiff_t>(len);
  if (j < 0) j = -j;
  if (j >= n) j = 2 * (n - 1) - j;
  return static_cast<std::size_t>(j);
}

}  // namespace

StftShape GetStftShape(std::size_t length, std::size_t window) {
  if (window < 4) throw UsageError("stft: window must be >= 4");
  if (!IsPowerOfTwo(window)) {
    throw UsageError("stft: window " + std::to_string(window) + " is not a power of two");
  }
  if (length == 0) throw UsageError("stft: empty signal");
  StftShape s;
  s.length = length;
  s.window = window;
  s.hop = window / 4;
  s.bins = window / 2 + 1;
  const std::size_t extended = std::max(length, window);
  s.frames = 1 + extended / s.hop;
  return s;
}

std::vector<double> HannWindow(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

ComplexSpectrogram Stft(std::span<const double> x, std::size_t window) {
  ComplexSpectrogram out;
  out.shape = GetStftShape(x.size(), window);
  const StftShape& s = out.shape;
  const std::size_t extended = std::max(s.length, window);
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto w = HannWindow(window);
  out.data.resize(s.frames * s.bins);

#pragma omp parallel
  {
    RealFft fft(window);
    std::vector<double> frame(window);
#pragma omp for schedule(static)
    for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(s.frames); ++f) {
      const std::ptrdiff_t start = f * static_cast<std::ptrdiff_t>(s.hop) - half;
      for (std::size_t i = 0; i < window; ++i) {
        const std::size_t j = ReflectIndex(start + static_cast<std::ptrdiff_t>(i), extended);
        frame[i] = (j < s.length ? x[j] : 0.0) * w[i];
      }
      fft.Forward(frame, std::span(out.data).subspan(static_cast<std::size_t>(f) * s.bins,
                                                     s.bins));
    }
  }
  return out;
}

std::vector<double> StftAdjoint(const ComplexSpectrogram& grad) {
  const StftShape& s = grad.shape;
  const std::size_t window = s.window;
  const std::size_t extended = std::max(s.length, window);
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto w = HannWindow(window);

  // Per-frame time-domain gradients, computed independently, then
  // overlap-added serially so the result does not depend on thread count.
  std::vector<double> frames(s.frames * window);
#pragma omp parallel
  {
    RealFft fft(window);
    std::vector<std::complex<double>> spec(s.bins);
#pragma omp for schedule(static)
    for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(s.frames); ++f) {
      const auto* g = grad.data.data() + static_cast<std::size_t>(f) * s.bins;
      for (std::size_t k = 0; k < s.bins; ++k) {
        const bool edge = k == 0 || k == s.bins - 1;
        spec[k] = edge ? std::complex<double>(g[k].real(), 0.0) : 0.5 * g[k];
      }
      auto dst = std::span(frames).subspan(static_cast<std::size_t>(f) * window, window);
      fft.Inverse(spec, dst);
      for (std::size_t i = 0; i < window; ++i) dst[i] *= w[i];
    }
  }

  std::vector<double> dx(extended, 0.0);
  for (std::size_t f = 0; f < s.frames; ++f) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(f * s.hop) - half;
    for (std::size_t i = 0; i < window; ++i) {
      dx[ReflectIndex(start + static_cast<std::ptrdiff_t>(i), extended)] +=
          frames[f * window + i];
    }
  }
  dx.resize(s.length);
  return dx;
}

Matrix StftMagnitude(std::span<const double> x, std::size_t window) {
  const auto spec = Stft(x, window);
  const StftShape& s = spec.shape;
  Matrix mag(s.bins, s.frames);
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t k = 0; k < s.bins; ++k) mag(k, f) = std::abs(spec.data[f * s.bins + k]);
  }
  return mag;
}

}  // namespace pitchrave::dsp
