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

#ifndef PITCHRAVE_EVAL_OBJECTIVE_HPP_
#define PITCHRAVE_EVAL_OBJECTIVE_HPP_

#include <cstddef>
#include <filesystem>
#include <ostream>

#include "json.hpp"
#include "pitchrave/audio.hpp"
#include "pitchrave/matrix.hpp"
#include "pitchrave/metrics/distance.hpp"

namespace pitchrave::eval {

// Log-magnitude spectrogram, bins x frames, in dB.
struct SpectrogramDb {
  Matrix db;
  std::size_t window = 0;
  std::size_t hop = 0;
  int sample_rate = 0;
  double eps = 0.0;

  double BinHz(std::size_t bin) const;
  double FrameSeconds(std::size_t frame) const;  // frame centre
};

// 20 log10(|STFT| + eps) with a Hann window and hop window / 4.
SpectrogramDb ExportSpectrogram(const AudioBuffer& x, std::size_t window, double eps = 1e-5);

// One row per frame: time_s followed by one dB value per bin; the header
// lists the bin frequencies.
void WriteSpectrogramCsv(std::ostream& out, const SpectrogramDb& s);

struct ObjectiveConfig {
  std::size_t spectral_window = 1024;
  metrics::MultiscaleConfig multiscale = metrics::MultiscaleConfig::FullScale();
};

// Single-scale spectral distance and multiscale distance for one pair.
nlohmann::json ComparePair(const AudioBuffer& ref, const AudioBuffer& test,
                           const ObjectiveConfig& cfg);

// Matches `<stem>.wav` files of both directories and reports per-file and
// mean distances: {files: [{stem, spectral_distance, multiscale_distance}],
// mean: {...}, config}. Throws DataError listing unmatched stems.
nlohmann::json ObjectiveReport(const std::filesystem::path& ref_dir,
                               const std::filesystem::path& test_dir,
                               const ObjectiveConfig& cfg);

}  // namespace pitchrave::eval

#endif  // PITCHRAVE_EVAL_OBJECTIVE_HPP_
