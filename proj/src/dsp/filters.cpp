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

#include "pitchrave/dsp/filters.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "pitchrave/common.hpp"

namespace pitchrave::dsp {

std::vector<double> FilterCascade(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<Biquad> ButterworthHighpass(int order, double cutoff_hz, double sample_rate) {
  if (order < 2 || order % 2 != 0) throw UsageError("butterworth: order must be even");
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sample_rate;
  const double cw = std::cos(w0);
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double angle = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::cos(angle));
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 + cw) / 2.0 / a0;
    s.b1 = -(1.0 + cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    sections.push_back(s);
  }
  return sections;
}

Biquad Allpass(double freq_hz, double radius, double sample_rate) {
  const double theta = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  Biquad s;
  s.a1 = -2.0 * radius * std::cos(theta);
  s.a2 = radius * radius;
  s.b0 = s.a2;
  s.b1 = s.a1;
  s.b2 = 1.0;
  return s;
}

double CascadeMagnitude(std::span<const Biquad> sections, double freq_hz, double sample_rate) {
  const std::complex<double> z1 =
      std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return std::abs(h);
}

AudioBuffer MakeAnchor(const AudioBuffer& x) {
  x.Validate();
  if (x.sample_rate != kSampleRate) {
    throw UsageError("anchor: expected 16 kHz input, got " + std::to_string(x.sample_rate));
  }
  static const auto sections = ButterworthHighpass(8, 1000.0, kSampleRate);
  AudioBuffer out;
  out.sample_rate = x.sample_rate;
  out.samples = FilterCascade(sections, x.samples);
  return out;
}

std::vector<double> Resample(std::span<const double> x, int src_rate, int dst_rate) {
  if (src_rate == dst_rate) return {x.begin(), x.end()};
  if (dst_rate > src_rate) throw UsageError("upsampling unsupported");
  constexpr double kZeroCrossings = 32.0;
  const double ratio = static_cast<double>(src_rate) / dst_rate;  // > 1
  const double half_width = kZeroCrossings * ratio;                // input samples
  const auto out_len = static_cast<std::size_t>(
      static_cast<double>(x.size()) * dst_rate / src_rate);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> y(out_len);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(out_len); ++n) {
    const double t = static_cast<double>(n) * ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(len - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double d = (t - static_cast<double>(i)) / ratio;  // output-rate units
      const double u = d / kZeroCrossings;
      if (std::abs(u) >= 1.0) continue;
      const double window = 0.42 + 0.5 * std::cos(std::numbers::pi * u) +
                            0.08 * std::cos(2.0 * std::numbers::pi * u);
      const double sinc = d == 0.0 ? 1.0 : std::sin(std::numbers::pi * d) / (std::numbers::pi * d);
      acc += x[static_cast<std::size_t>(i)] * sinc * window;
    }
    y[static_cast<std::size_t>(n)] = acc / ratio;
  }
  return y;
}

AudioBuffer Preprocess(std::span<const double> interleaved, int src_rate, int channels) {
  if (channels <= 0) throw UsageError("preprocess: channel count must be positive");
  if (src_rate < kSampleRate) throw UsageError("upsampling unsupported");
  const std::size_t frames = interleaved.size() / static_cast<std::size_t>(channels);
  std::vector<double> mono(frames);
  if (channels == 1) {
    mono.assign(interleaved.begin(), interleaved.begin() + static_cast<std::ptrdiff_t>(frames));
  } else {
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) acc += interleaved[i * channels + c];
      mono[i] = acc / channels;
    }
  }
  AudioBuffer out;
  out.sample_rate = kSampleRate;
  out.samples = Resample(mono, src_rate, kSampleRate);
  out.Validate();
  return out;
}

AudioBuffer Augment(const AudioBuffer& x, const AugmentConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AudioBuffer out;
  out.sample_rate = x.sample_rate;
  if (cfg.crop_length) {
    const std::size_t crop = *cfg.crop_length;
    if (crop > x.size()) {
      throw UsageError("augment: crop length " + std::to_string(crop) + " exceeds signal length " +
                       std::to_string(x.size()));
    }
    const std::size_t step = std::max<std::size_t>(cfg.crop_alignment, 1);
    const std::size_t slots = (x.size() - crop) / step;
    std::uniform_int_distribution<std::size_t> pick(0, slots);
    const std::size_t offset = pick(rng) * step;
    out.samples.assign(x.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                       x.samples.begin() + static_cast<std::ptrdiff_t>(offset + crop));
  } else {
    out.samples = x.samples;
  }
  if (cfg.allpass) {
    const double lo = std::log(cfg.allpass_min_hz);
    const double hi = std::log(cfg.allpass_max_hz);
    std::uniform_real_distribution<double> log_freq(lo, hi);
    const Biquad section = Allpass(std::exp(log_freq(rng)), cfg.allpass_radius, x.sample_rate);
    out.samples = FilterCascade(std::span(&section, 1), out.samples);
  }
  if (cfg.dequantize) {
    std::uniform_real_distribution<double> noise(-0.5 / 32768.0, 0.5 / 32768.0);
    for (double& s : out.samples) s += noise(rng);
  }
  return out;
}

}  // namespace pitchrave::dsp
