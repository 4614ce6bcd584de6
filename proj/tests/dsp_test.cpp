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

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "pitchrave/common.hpp"
#include "pitchrave/dsp/filters.hpp"
#include "pitchrave/dsp/pqmf.hpp"
#include "pitchrave/dsp/stft.hpp"
#include "test_util.hpp"

namespace pitchrave {
namespace {

using testing::Buffer;
using testing::kPi;
using testing::Sine;
using testing::WhiteNoise;

// Band filters rebuilt from the prototype by the cosine-modulation formula.
std::vector<std::vector<double>> OracleFilters(const dsp::PqmfBank& bank) {
  const auto& h = bank.prototype();
  const std::size_t m = bank.n_bands();
  const double c = (static_cast<double>(h.size()) - 1) / 2;
  std::vector<std::vector<double>> out(m, std::vector<double>(h.size()));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      const double phase = (k % 2 == 0 ? 1.0 : -1.0) * kPi / 4;
      out[k][j] = 2 * h[j] * std::cos((2.0 * k + 1) * kPi / (2.0 * m) * (j - c) + phase);
    }
  }
  return out;
}

// Full convolution, then keep every M-th output aligned to the filter centre.
std::vector<double> FilterAndDecimate(std::span<const double> x, std::span<const double> h,
                                      std::size_t m) {
  std::vector<double> full(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) full[i + j] += x[i] * h[j];
  }
  const std::size_t c = (h.size() - 1) / 2;
  std::vector<double> out;
  for (std::size_t f = 0; f < x.size() / m; ++f) out.push_back(full[f * m + c]);
  return out;
}

TEST(Pqmf, ZeroSignalGivesZeroBands) {
  const auto bank = dsp::PqmfBank::Design(16);
  const auto m = bank.Analysis(std::vector<double>(1024, 0.0));
  EXPECT_EQ(m.n_bands(), 16u);
  EXPECT_EQ(m.n_frames(), 64u);
  for (double v : m.data.data()) EXPECT_EQ(v, 0.0);
}

TEST(Pqmf, ImpulseMatchesFirDecimateOracle) {
  const auto bank = dsp::PqmfBank::Design(16);
  std::vector<double> x(1024, 0.0);
  x[0] = 1.0;
  const auto m = bank.Analysis(x);
  const auto filters = OracleFilters(bank);
  double worst = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    const auto expect = FilterAndDecimate(x, filters[k], 16);
    for (std::size_t f = 0; f < 64; ++f) {
      worst = std::max(worst, std::abs(m.data(k, f) - expect[f]));
      peak = std::max(peak, std::abs(expect[f]));
    }
  }
  EXPECT_GT(peak, 0.01);
  EXPECT_LT(worst, 1e-12);
}

TEST(Pqmf, NoiseMatchesFirDecimateOracle) {
  const auto bank = dsp::PqmfBank::Design(4);
  const auto x = WhiteNoise(512, 3);
  const auto m = bank.Analysis(x);
  const auto filters = OracleFilters(bank);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto expect = FilterAndDecimate(x, filters[k], 4);
    for (std::size_t f = 0; f < expect.size(); ++f) EXPECT_NEAR(m.data(k, f), expect[f], 1e-12);
  }
}

TEST(Pqmf, RoundTripSnrOnWhiteNoise) {
  for (std::size_t bands : {2u, 4u, 8u, 16u}) {
    const auto bank = dsp::PqmfBank::Design(bands);
    const auto x = WhiteNoise(4096, 11 + bands);
    const auto y = bank.Synthesis(bank.Analysis(x));
    EXPECT_EQ(y.delay, 0u);
    ASSERT_EQ(y.audio.size(), x.size());
    EXPECT_GE(dsp::SnrDb(x, y.audio.samples, bank.taps()), 60.0) << bands << " bands";
  }
}

TEST(Pqmf, PadIsRecordedAndTrimmed) {
  const auto bank = dsp::PqmfBank::Design(8);
  const auto x = WhiteNoise(1003, 5);
  const auto m = bank.Analysis(x);
  EXPECT_EQ(m.pad, 5u);
  EXPECT_EQ(m.n_frames() * 8, 1008u);
  EXPECT_EQ(bank.Synthesis(m).audio.size(), 1003u);
}

TEST(Pqmf, ElementCountEqualsInputCount) {
  const auto bank = dsp::PqmfBank::Design(16);
  const auto m = bank.Analysis(WhiteNoise(2048, 1));
  EXPECT_EQ(m.n_bands() * m.n_frames(), 2048u);
}

TEST(Pqmf, ZeroBandsSynthesiseSilence) {
  const auto bank = dsp::PqmfBank::Design(16);
  dsp::MultibandFrame m;
  m.data = Matrix(16, 64);
  const auto y = bank.Synthesis(m);
  ASSERT_EQ(y.audio.size(), 1024u);
  for (double v : y.audio.samples) EXPECT_EQ(v, 0.0);
}

TEST(Pqmf, SingleBandIsIdentity) {
  const auto bank = dsp::PqmfBank::Design(1);
  const auto x = WhiteNoise(300, 2);
  const auto m = bank.Analysis(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(m.data(0, i), x[i]);
  const auto y = bank.Synthesis(m);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y.audio.samples[i], x[i]);
}

TEST(Pqmf, Errors) {
  const auto bank = dsp::PqmfBank::Design(16);
  try {
    bank.Analysis(std::vector<double>{});
    FAIL() << "expected an error";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("empty signal"), std::string::npos);
  }
  dsp::MultibandFrame wrong;
  wrong.data = Matrix(8, 4);
  EXPECT_THROW(bank.Synthesis(wrong), UsageError);
  EXPECT_THROW(dsp::PqmfBank::Design(12), UsageError);
}

TEST(Pqmf, AnalysisIsLinear) {
  const auto bank = dsp::PqmfBank::Design(8);
  const auto x = WhiteNoise(2048, 7), y = WhiteNoise(2048, 8);
  const double a = 0.7, b = -1.9;
  std::vector<double> mix(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mix[i] = a * x[i] + b * y[i];
  const auto mx = bank.Analysis(x), my = bank.Analysis(y), mm = bank.Analysis(mix);
  double err = 0, scale = 0;
  for (std::size_t i = 0; i < mm.data.data().size(); ++i) {
    const double expect = a * mx.data.data()[i] + b * my.data.data()[i];
    err = std::max(err, std::abs(mm.data.data()[i] - expect));
    scale = std::max(scale, std::abs(expect));
  }
  EXPECT_LT(err / scale, 1e-10);
}

TEST(Pqmf, AdjointIdentity) {
  // <A x, b> == <x, A^T b> for the raw maps used by autodiff.
  const auto bank = dsp::PqmfBank::Design(4);
  const auto x = WhiteNoise(256, 1), b = WhiteNoise(256, 2);
  std::vector<double> ax(256), atb(256);
  bank.AnalysisInto(x, ax);
  bank.AnalysisAdjointInto(b, atb);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    lhs += ax[i] * b[i];
    rhs += x[i] * atb[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs) + 1e-14);
}

TEST(Pqmf, PrototypeIsSymmetricNyquistFilter) {
  const auto bank = dsp::PqmfBank::Design(16);
  const auto& h = bank.prototype();
  EXPECT_EQ(h.size() % 2, 1u);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
  EXPECT_LT(dsp::NyquistResidual(h, 16), 1e-3);
}

TEST(Stft, ShapeAndErrors) {
  const auto s = dsp::GetStftShape(1000, 256);
  EXPECT_EQ(s.hop, 64u);
  EXPECT_EQ(s.bins, 129u);
  EXPECT_EQ(s.frames, 1 + 1000 / 64);
  EXPECT_THROW(dsp::GetStftShape(100, 2), UsageError);
  EXPECT_THROW(dsp::GetStftShape(100, 48), UsageError);
  const Matrix m = dsp::StftMagnitude(WhiteNoise(100, 1), 256);  // shorter than window: padded
  EXPECT_EQ(m.rows(), 129u);
  EXPECT_EQ(m.cols(), 1 + 256 / 64);
}

TEST(Stft, ZeroSignal) {
  const Matrix m = dsp::StftMagnitude(std::vector<double>(512, 0.0), 64);
  for (double v : m.data()) EXPECT_EQ(v, 0.0);
}

TEST(Stft, MatchesNaiveDftOnNoise) {
  const auto x = WhiteNoise(700, 9);
  const Matrix m = dsp::StftMagnitude(x, 128);
  const auto oracle = testing::NaiveStftMagnitude(x, 128);
  ASSERT_EQ(m.cols(), oracle.size());
  for (std::size_t f = 0; f < oracle.size(); ++f) {
    for (std::size_t k = 0; k < m.rows(); ++k) EXPECT_NEAR(m(k, f), oracle[f][k], 1e-10);
  }
}

TEST(Stft, BinCentredSinePeaksAtItsBin) {
  const std::size_t window = 256, k = 20;
  const double freq = k * 16000.0 / window;
  const auto x = Sine(2048, freq);
  const Matrix m = dsp::StftMagnitude(x, window);
  const auto oracle = testing::NaiveStftMagnitude(x, window);
  for (std::size_t f = 0; f < m.cols(); ++f) {
    for (std::size_t b = 0; b < m.rows(); ++b) EXPECT_NEAR(m(b, f), oracle[f][b], 1e-9);
    // Edge frames see the reflected (folded) signal; the peak claim is about
    // frames that lie inside the sine.
    const bool interior = f * window / 4 >= window / 2 && f * window / 4 + window / 2 <= x.size();
    if (!interior) continue;
    std::size_t arg = 0;
    for (std::size_t b = 1; b < m.rows(); ++b) {
      if (m(b, f) > m(arg, f)) arg = b;
    }
    EXPECT_EQ(arg, k) << "frame " << f;
  }
}

TEST(Stft, ImpulseGivesFlatFrame) {
  const std::size_t window = 64, hop = 16;
  std::vector<double> x(512, 0.0);
  const std::size_t pos = 200;
  x[pos] = 1.0;
  const Matrix m = dsp::StftMagnitude(x, window);
  const auto w = testing::NaiveHann(window);
  // Frame f covers samples [f hop - window/2, f hop + window/2).
  for (std::size_t f = 0; f < m.cols(); ++f) {
    const auto start = static_cast<std::ptrdiff_t>(f * hop) - static_cast<std::ptrdiff_t>(window / 2);
    const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(pos) - start;
    const double gain = offset >= 0 && offset < static_cast<std::ptrdiff_t>(window)
                            ? w[static_cast<std::size_t>(offset)]
                            : 0.0;
    for (std::size_t k = 0; k < m.rows(); ++k) EXPECT_NEAR(m(k, f), gain, 1e-12);
  }
}

TEST(Stft, ParsevalOnInteriorFrame) {
  const std::size_t window = 256, hop = 64;
  const auto x = WhiteNoise(2048, 4);
  const Matrix m = dsp::StftMagnitude(x, window);
  const auto w = testing::NaiveHann(window);
  const std::size_t f = 10;
  const std::size_t start = f * hop - window / 2;
  double time_energy = 0;
  for (std::size_t j = 0; j < window; ++j) time_energy += std::pow(w[j] * x[start + j], 2);
  double freq_energy = std::pow(m(0, f), 2) + std::pow(m(window / 2, f), 2);
  for (std::size_t k = 1; k < window / 2; ++k) freq_energy += 2 * std::pow(m(k, f), 2);
  EXPECT_LT(testing::RelError(freq_energy / window, time_energy), 1e-6);
}

TEST(Stft, HannIsPeriodic) {
  const auto w = dsp::HannWindow(8);
  const auto o = testing::NaiveHann(8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(w[i], o[i], 1e-15);
}

TEST(Anchor, ZeroStaysZero) {
  const auto y = dsp::MakeAnchor(Buffer(std::vector<double>(1000, 0.0)));
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(Anchor, AttenuatesLowPassesHigh) {
  const std::size_t n = 32000, skip = 8000;  // skip the start-up transient
  auto measure = [&](double freq) {
    const auto x = Sine(n, freq);
    const auto y = dsp::MakeAnchor(Buffer(x));
    const std::span<const double> xs(x.data() + skip, n - skip);
    const std::span<const double> ys(y.samples.data() + skip, n - skip);
    return 10 * std::log10(testing::TonePower(ys, freq) / testing::TonePower(xs, freq));
  };
  EXPECT_LE(measure(100.0), -40.0);
  EXPECT_LE(measure(500.0), -40.0);
  EXPECT_NEAR(measure(4000.0), 0.0, 1.0);
}

TEST(Anchor, DesignResponse) {
  const auto sections = dsp::ButterworthHighpass(8, 1000.0, 16000.0);
  EXPECT_EQ(sections.size(), 4u);
  EXPECT_NEAR(20 * std::log10(dsp::CascadeMagnitude(sections, 1000.0, 16000.0)), -3.0103, 0.01);
  EXPECT_LE(20 * std::log10(dsp::CascadeMagnitude(sections, 500.0, 16000.0)), -40.0);
  for (double f = 2000.0; f < 8000.0; f += 100.0) {
    EXPECT_NEAR(20 * std::log10(dsp::CascadeMagnitude(sections, f, 16000.0)), 0.0, 1.0) << f;
  }
}

TEST(Anchor, IdempotentInPassband) {
  const std::size_t n = 16000, skip = 4000;
  for (double freq : {2500.0, 4000.0, 6000.0}) {
    const auto once = dsp::MakeAnchor(Buffer(Sine(n, freq)));
    const auto twice = dsp::MakeAnchor(once);
    const std::span<const double> a(once.samples.data() + skip, n - skip);
    const std::span<const double> b(twice.samples.data() + skip, n - skip);
    EXPECT_NEAR(10 * std::log10(testing::TonePower(b, freq) / testing::TonePower(a, freq)), 0.0,
                1.0);
  }
}

TEST(Anchor, RejectsOtherRates) {
  EXPECT_THROW(dsp::MakeAnchor(Buffer({0.0, 0.1}, 44100)), UsageError);
}

TEST(Preprocess, PassThroughIsBitIdentical) {
  const auto x = WhiteNoise(1000, 1);
  const auto y = dsp::Preprocess(x, 16000, 1);
  EXPECT_EQ(y.sample_rate, 16000);
  EXPECT_EQ(y.samples, x);
}

TEST(Preprocess, IdenticalStereoEqualsMono) {
  const auto mono = WhiteNoise(3000, 2);
  std::vector<double> stereo;
  for (double v : mono) {
    stereo.push_back(v);
    stereo.push_back(v);
  }
  const auto a = dsp::Preprocess(stereo, 48000, 2);
  const auto b = dsp::Preprocess(mono, 48000, 1);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a.samples[i], b.samples[i]);
}

TEST(Preprocess, DownsampledSineKeepsFrequency) {
  const auto x = Sine(32000, 1000.0, 32000.0);
  const auto y = dsp::Preprocess(x, 32000, 1);
  EXPECT_EQ(y.sample_rate, 16000);
  EXPECT_NEAR(static_cast<double>(y.size()), 16000.0, 1.0);
  const double peak = testing::PeakFrequency(y.samples, 900.0, 1100.0);
  EXPECT_LT(std::abs(peak - 1000.0) / 1000.0, 1e-3);
}

TEST(Preprocess, RejectsUpsampling) {
  try {
    dsp::Preprocess(WhiteNoise(100, 1), 8000, 1);
    FAIL() << "expected an error";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("upsampling unsupported"), std::string::npos);
  }
}

TEST(Augment, IdentitySpec) {
  const auto x = Buffer(WhiteNoise(500, 1));
  EXPECT_EQ(dsp::Augment(x, {}, 42).samples, x.samples);
}

TEST(Augment, DeterministicGivenSeed) {
  const auto x = Buffer(WhiteNoise(4000, 1));
  dsp::AugmentConfig cfg;
  cfg.crop_length = 1024;
  cfg.crop_alignment = 16;
  cfg.allpass = true;
  cfg.dequantize = true;
  const auto a = dsp::Augment(x, cfg, 9);
  const auto b = dsp::Augment(x, cfg, 9);
  const auto c = dsp::Augment(x, cfg, 10);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
  EXPECT_EQ(a.size(), 1024u);
}

TEST(Augment, CropIsAlignedContiguousWindow) {
  std::vector<double> ramp(4000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 4000.0;
  dsp::AugmentConfig cfg;
  cfg.crop_length = 256;
  cfg.crop_alignment = 16;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto y = dsp::Augment(Buffer(ramp), cfg, seed);
    const auto start = static_cast<std::size_t>(std::lround(y.samples[0] * 4000.0));
    EXPECT_EQ(start % 16, 0u);
    for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(y.samples[i], ramp[start + i]);
  }
}

TEST(Augment, CropLongerThanSignalFails) {
  dsp::AugmentConfig cfg;
  cfg.crop_length = 1000;
  EXPECT_THROW(dsp::Augment(Buffer(WhiteNoise(999, 1)), cfg, 0), UsageError);
}

TEST(Augment, AllpassPreservesSinePower) {
  dsp::AugmentConfig cfg;
  cfg.allpass = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (double freq : {110.0, 440.0, 3000.0}) {
      const auto x = Sine(16000, freq);
      const auto y = dsp::Augment(Buffer(x), cfg, seed);
      const std::span<const double> xs(x.data() + 4000, 12000), ys(y.samples.data() + 4000, 12000);
      EXPECT_NEAR(10 * std::log10(testing::Energy(ys) / testing::Energy(xs)), 0.0, 0.5);
    }
  }
}

TEST(Augment, DequantizationNoiseIsOneStep) {
  dsp::AugmentConfig cfg;
  cfg.dequantize = true;
  const auto x = Buffer(std::vector<double>(5000, 0.25));
  const auto y = dsp::Augment(x, cfg, 3);
  double lo = 1, hi = -1;
  for (double v : y.samples) {
    lo = std::min(lo, v - 0.25);
    hi = std::max(hi, v - 0.25);
  }
  EXPECT_GE(lo, -0.5 / 32768);
  EXPECT_LE(hi, 0.5 / 32768);
  EXPECT_GT(hi - lo, 0.9 / 32768);  // spans nearly the whole step
}

TEST(Allpass, UnitMagnitude) {
  const auto ap = dsp::Allpass(700.0, 0.95, 16000.0);
  const std::vector<dsp::Biquad> one = {ap};
  for (double f = 10; f < 8000; f += 97) EXPECT_NEAR(dsp::CascadeMagnitude(one, f, 16000.0), 1.0, 1e-12);
}

// Properties over random draws.
TEST(DspProperty, RoundTripForRandomSignals) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t bands = std::size_t{2} << (rng() % 4);  // 2..16
    const std::size_t len = 4096 + bands * (rng() % 256);
    const auto bank = dsp::PqmfBank::Design(bands);
    const auto x = WhiteNoise(len, rng());
    const auto y = bank.Synthesis(bank.Analysis(x));
    EXPECT_GE(dsp::SnrDb(x, y.audio.samples, bank.taps()), 60.0);
  }
}

TEST(DspProperty, PqmfRuntimeIsInteractive) {
  const auto bank = dsp::PqmfBank::Design(16);
  const auto x = WhiteNoise(65536, 1);
  const auto t0 = std::chrono::steady_clock::now();
  const auto y = bank.Synthesis(bank.Analysis(x));
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(sec, 1.0);
  EXPECT_GE(dsp::SnrDb(x, y.audio.samples, bank.taps()), 60.0);
}

}  // namespace
}  // namespace pitchrave
