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

#ifndef PITCHRAVE_DSP_PQMF_HPP_
#define PITCHRAVE_DSP_PQMF_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "pitchrave/audio.hpp"
#include "pitchrave/matrix.hpp"

namespace pitchrave::dsp {

// n_bands x n_frames subband signals. `pad` trailing zeros were appended to
// the input to make its length a multiple of n_bands.
struct MultibandFrame {
  Matrix data;
  std::size_t pad = 0;

  std::size_t n_bands() const { return data.rows(); }
  std::size_t n_frames() const { return data.cols(); }
};

struct SynthesisResult {
  AudioBuffer audio;
  // Samples by which audio lags the signal that was analysed. Zero for the
  // centered filters used here.
  std::size_t delay = 0;
};

// Cosine-modulated pseudo-QMF bank with a Kaiser-window prototype.
//
// The prototype cutoff is tuned so that h * reverse(h) is close to a
// Nyquist(2M) filter, which makes analysis followed by synthesis a
// near-identity. Analysis filters are centered (odd length), so the round
// trip has no group delay; synthesis is M times the adjoint of analysis.
class PqmfBank {
 public:
  // n_bands must be a power of two. n_bands == 1 gives the identity bank.
  static PqmfBank Design(std::size_t n_bands, double attenuation_db = 100.0);

  std::size_t n_bands() const { return n_bands_; }
  std::size_t taps() const { return prototype_.size(); }
  double attenuation_db() const { return attenuation_db_; }
  double cutoff() const { return cutoff_; }
  const std::vector<double>& prototype() const { return prototype_; }
  // filters()[k * taps() + j] is tap j of band k.
  const std::vector<double>& filters() const { return filters_; }

  // Throws UsageError("empty signal") on empty input.
  MultibandFrame Analysis(std::span<const double> x) const;

  // Throws UsageError on band-count mismatch.
  SynthesisResult Synthesis(const MultibandFrame& m) const;

  // Raw linear maps over n_frames * n_bands band-major buffers, used by the
  // autodiff wrapper.
  void AnalysisInto(std::span<const double> x, std::span<double> bands) const;
  void AnalysisAdjointInto(std::span<const double> bands, std::span<double> x) const;

 private:
  PqmfBank() = default;

  std::size_t n_bands_ = 1;
  double attenuation_db_ = 0.0;
  double cutoff_ = 0.0;
  std::vector<double> prototype_;
  std::vector<double> filters_;
};

// Kaiser-window lowpass (scipy.signal.kaiserord + firwin, unscaled) with
// cutoff `wc` in radians/sample. Length is chosen by the Kaiser formula with
// a transition width of half the cutoff and rounded up to odd.
std::vector<double> KaiserLowpass(double wc, double attenuation_db);

// Largest off-center Nyquist(2M) sample of h * reverse(h).
double NyquistResidual(std::span<const double> h, std::size_t n_bands);

// 10 log10(signal energy / error energy) over [margin, len - margin).
double SnrDb(std::span<const double> reference, std::span<const double> test,
             std::size_t margin = 0);

}  // namespace pitchrave::dsp

#endif  // PITCHRAVE_DSP_PQMF_HPP_
