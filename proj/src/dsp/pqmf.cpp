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

#include "pitchrave/dsp/pqmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pitchrave/common.hpp"

namespace pitchrave::dsp {

namespace {

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Transition width of the Kaiser length formula relative to the cutoff. A
// transition as wide as the cutoff leaves the round trip at ~60 dB; halving
// it doubles the length and buys ~3.5 dB.
constexpr double kTransitionRatio = 0.5;

double KaiserBeta(double a) {
  if (a > 50.0) return 0.1102 * (a - 8.7);
  if (a > 21.0) return 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0);
  return 0.0;
}

std::vector<double> KaiserWindow(std::size_t n, double beta) {
  std::vector<double> w(n);
  const double denom = std::cyl_bessel_i(0.0, beta);
  const double half = static_cast<double>(n - 1) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = half > 0 ? (static_cast<double>(i) - half) / half : 0.0;
    w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

}  // namespace

std::vector<double> KaiserLowpass(double wc, double attenuation_db) {
  const double width = wc / std::numbers::pi;
  const double transition = kTransitionRatio * width;
  const double beta = KaiserBeta(attenuation_db);
  const auto kaiser_taps = static_cast<std::size_t>(
      std::ceil((attenuation_db - 7.95) / 2.285 / (std::numbers::pi * transition) + 1.0));
  const std::size_t n = 2 * (kaiser_taps / 2) + 1;
  const auto w = KaiserWindow(n, beta);
  const double alpha = static_cast<double>(n - 1) / 2.0;
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = width * Sinc(width * (static_cast<double>(i) - alpha)) * w[i];
  }
  return h;
}

double NyquistResidual(std::span<const double> h, std::size_t n_bands) {
  const std::size_t n = h.size();
  double worst = 0.0;
  // g[center + lag] = sum_i h[i] h[i + lag]
  for (std::size_t lag = 2 * n_bands; lag < n; lag += 2 * n_bands) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += h[i] * h[i + lag];
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

PqmfBank PqmfBank::Design(std::size_t n_bands, double attenuation_db) {
  if (!IsPowerOfTwo(n_bands)) {
    throw UsageError("pqmf: n_bands must be a power of two, got " + std::to_string(n_bands));
  }
  PqmfBank bank;
  bank.n_bands_ = n_bands;
  bank.attenuation_db_ = attenuation_db;
  if (n_bands == 1) {
    bank.prototype_ = {1.0};
    bank.filters_ = {1.0};
    bank.cutoff_ = std::numbers::pi;
    return bank;
  }
  if (attenuation_db <= 21.0) throw UsageError("pqmf: attenuation must exceed 21 dB");

  // Coarse scan of the cutoff around pi / 2M followed by golden-section
  // refinement of the best bracket.
  const double nominal = std::numbers::pi / (2.0 * static_cast<double>(n_bands));
  auto loss = [&](double wc) {
    return NyquistResidual(KaiserLowpass(wc, attenuation_db), n_bands);
  };
  constexpr int kGrid = 200;
  const double lo = 0.9 * nominal;
  const double hi = 1.2 * nominal;
  const double step = (hi - lo) / kGrid;
  double best_wc = lo;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double wc = lo + step * i;
    const double value = loss(wc);
    if (value < best) {
      best = value;
      best_wc = wc;
    }
  }
  double a = best_wc - step;
  double b = best_wc + step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = loss(c);
  double fd = loss(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = loss(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = loss(d);
    }
  }
  const double refined = fc < fd ? c : d;
  if (std::min(fc, fd) < best) best_wc = refined;

  bank.cutoff_ = best_wc;
  bank.prototype_ = KaiserLowpass(best_wc, attenuation_db);
  const std::size_t taps = bank.prototype_.size();
  const double center = static_cast<double>(taps - 1) / 2.0;
  const auto m = static_cast<double>(n_bands);
  bank.filters_.resize(n_bands * taps);
  for (std::size_t k = 0; k < n_bands; ++k) {
    const double phase = (k % 2 == 0 ? 1.0 : -1.0) * std::numbers::pi / 4.0;
    const double freq = (2.0 * static_cast<double>(k) + 1.0) * std::numbers::pi / (2.0 * m);
    for (std::size_t j = 0; j < taps; ++j) {
      bank.filters_[k * taps + j] =
          2.0 * bank.prototype_[j] * std::cos(freq * (static_cast<double>(j) - center) + phase);
    }
  }
  return bank;
}

// bands[k * frames + f] = sum_j h_k[j] x[f M + c - j]
void PqmfBank::AnalysisInto(std::span<const double> x, std::span<double> bands) const {
  const auto m = static_cast<std::ptrdiff_t>(n_bands_);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  const auto frames = len / m;
  const auto taps = static_cast<std::ptrdiff_t>(prototype_.size());
  const std::ptrdiff_t c = (taps - 1) / 2;
  const double* h = filters_.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t k = 0; k < m; ++k) {
    for (std::ptrdiff_t f = 0; f < frames; ++f) {
      const std::ptrdiff_t t = f * m + c;
      const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, t - len + 1);
      const std::ptrdiff_t j_hi = std::min(taps - 1, t);
      const double* hk = h + k * taps;
      double acc = 0.0;
      for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) acc += hk[j] * x[t - j];
      bands[k * frames + f] = acc;
    }
  }
}

// x[t] = sum_k sum_f h_k[f M + c - t] bands[k * frames + f]
void PqmfBank::AnalysisAdjointInto(std::span<const double> bands, std::span<double> x) const {
  const auto m = static_cast<std::ptrdiff_t>(n_bands_);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  const auto frames = len / m;
  const auto taps = static_cast<std::ptrdiff_t>(prototype_.size());
  const std::ptrdiff_t c = (taps - 1) / 2;
  const double* h = filters_.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < len; ++t) {
    // frames f with 0 <= f M + c - t < taps
    const std::ptrdiff_t num_lo = t - c;
    std::ptrdiff_t f_lo = num_lo >= 0 ? (num_lo + m - 1) / m : -((-num_lo) / m);
    std::ptrdiff_t f_hi_num = t - c + taps - 1;
    std::ptrdiff_t f_hi = f_hi_num >= 0 ? f_hi_num / m : -((-f_hi_num + m - 1) / m);
    f_lo = std::max<std::ptrdiff_t>(f_lo, 0);
    f_hi = std::min(f_hi, frames - 1);
    double acc = 0.0;
    for (std::ptrdiff_t f = f_lo; f <= f_hi; ++f) {
      const std::ptrdiff_t j = f * m + c - t;
      for (std::ptrdiff_t k = 0; k < m; ++k) acc += h[k * taps + j] * bands[k * frames + f];
    }
    x[t] = acc;
  }
}

MultibandFrame PqmfBank::Analysis(std::span<const double> x) const {
  if (x.empty()) throw UsageError("empty signal");
  MultibandFrame out;
  out.pad = (n_bands_ - x.size() % n_bands_) % n_bands_;
  std::vector<double> padded(x.begin(), x.end());
  padded.resize(x.size() + out.pad, 0.0);
  out.data = Matrix(n_bands_, padded.size() / n_bands_);
  AnalysisInto(padded, out.data.data());
  return out;
}

SynthesisResult PqmfBank::Synthesis(const MultibandFrame& m) const {
  if (m.n_bands() != n_bands_) {
    throw UsageError("pqmf: frame has " + std::to_string(m.n_bands()) + " bands, bank has " +
                     std::to_string(n_bands_));
  }
  SynthesisResult out;
  out.audio.sample_rate = kSampleRate;
  out.audio.samples.assign(m.n_frames() * n_bands_, 0.0);
  AnalysisAdjointInto(m.data.data(), out.audio.samples);
  const auto gain = static_cast<double>(n_bands_);
  for (double& s : out.audio.samples) s *= gain;
  if (m.pad > 0 && m.pad <= out.audio.samples.size()) {
    out.audio.samples.resize(out.audio.samples.size() - m.pad);
  }
  out.delay = 0;
  return out;
}

double SnrDb(std::span<const double> reference, std::span<const double> test,
             std::size_t margin) {
  const std::size_t n = std::min(reference.size(), test.size());
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = margin; i + margin < n; ++i) {
    signal += reference[i] * reference[i];
    const double e = reference[i] - test[i];
    noise += e * e;
  }
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace pitchrave::dsp
