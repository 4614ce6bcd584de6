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

#ifndef PITCHRAVE_DSP_FILTERS_HPP_
#define PITCHRAVE_DSP_FILTERS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pitchrave/audio.hpp"

namespace pitchrave::dsp {

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1
};

// Causal cascade, transposed direct form II, zero initial state.
std::vector<double> FilterCascade(std::span<const Biquad> sections, std::span<const double> x);

// Even-order Butterworth high-pass as bilinear-transformed biquads.
std::vector<Biquad> ButterworthHighpass(int order, double cutoff_hz, double sample_rate);

// Second-order all-pass with poles at radius r and angle 2 pi f / fs.
Biquad Allpass(double freq_hz, double radius, double sample_rate);

// |H(f)| of a cascade.
double CascadeMagnitude(std::span<const Biquad> sections, double freq_hz, double sample_rate);

// 1 kHz 8th-order Butterworth high-pass of a 16 kHz mono buffer.
AudioBuffer MakeAnchor(const AudioBuffer& x);

// Windowed-sinc decimating resampler (Blackman window, 32 zero crossings
// per side at the output rate). Returns `x` unchanged when the rates match.
std::vector<double> Resample(std::span<const double> x, int src_rate, int dst_rate);

// Down-mix to mono by channel mean, then resample to 16 kHz.
// Throws UsageError("upsampling unsupported") for src_rate < 16000.
AudioBuffer Preprocess(std::span<const double> interleaved, int src_rate, int channels);

struct AugmentConfig {
  std::optional<std::size_t> crop_length;  // random contiguous crop
  std::size_t crop_alignment = 1;          // crop offsets are multiples of this
  bool allpass = false;                    // random-phase all-pass
  bool dequantize = false;                 // uniform noise of one 16-bit step
  double allpass_min_hz = 20.0;
  double allpass_max_hz = 2000.0;
  double allpass_radius = 0.99;
};

// Deterministic in (x, cfg, seed). Throws UsageError if the crop is longer
// than the signal.
AudioBuffer Augment(const AudioBuffer& x, const AugmentConfig& cfg, std::uint64_t seed);

}  // namespace pitchrave::dsp

#endif  // PITCHRAVE_DSP_FILTERS_HPP_
