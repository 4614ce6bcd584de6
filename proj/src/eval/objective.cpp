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

#include "pitchrave/eval/objective.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pitchrave/common.hpp"
#include "pitchrave/data/dataset.hpp"
#include "pitchrave/dsp/stft.hpp"
#include "pitchrave/train/trainer.hpp"

namespace pitchrave::eval {
namespace {

std::map<std::string, std::filesystem::path> WavFiles(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::map<std::string, std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") {
      out[e.path().stem().string()] = e.path();
    }
  }
  return out;
}

}  // namespace

double SpectrogramDb::BinHz(std::size_t bin) const {
  return static_cast<double>(bin) * sample_rate / static_cast<double>(window);
}

double SpectrogramDb::FrameSeconds(std::size_t frame) const {
  // Frames are centred on multiples of the hop thanks to the reflect padding.
  return static_cast<double>(frame * hop) / sample_rate;
}

SpectrogramDb ExportSpectrogram(const AudioBuffer& x, std::size_t window, double eps) {
  if (!(eps > 0.0)) throw UsageError("spectrogram: eps must be positive");
  x.Validate();
  SpectrogramDb out;
  out.db = dsp::StftMagnitude(x.samples, window);
  out.window = window;
  out.hop = window / 4;
  out.sample_rate = x.sample_rate;
  out.eps = eps;
  for (std::size_t i = 0; i < out.db.rows(); ++i) {
    for (std::size_t t = 0; t < out.db.cols(); ++t) {
      out.db(i, t) = 20.0 * std::log10(out.db(i, t) + eps);
    }
  }
  return out;
}

void WriteSpectrogramCsv(std::ostream& out, const SpectrogramDb& s) {
  out.precision(9);
  out << "time_s";
  for (std::size_t k = 0; k < s.db.rows(); ++k) out << ',' << s.BinHz(k);
  out << '\n';
  for (std::size_t t = 0; t < s.db.cols(); ++t) {
    out << s.FrameSeconds(t);
    for (std::size_t k = 0; k < s.db.rows(); ++k) out << ',' << s.db(k, t);
    out << '\n';
  }
}

nlohmann::json ComparePair(const AudioBuffer& ref, const AudioBuffer& test,
                           const ObjectiveConfig& cfg) {
  if (ref.size() != test.size()) {
    throw DataError("length mismatch: reference has " + std::to_string(ref.size()) +
                    " samples, test has " + std::to_string(test.size()));
  }
  cfg.multiscale.Validate();
  return {{"spectral_distance", metrics::SpectralDistance(ref.samples, test.samples,
                                                          cfg.spectral_window,
                                                          cfg.multiscale.eps_power)},
          {"multiscale_distance",
           metrics::MultiscaleSpectralDistance(ref.samples, test.samples, cfg.multiscale)}};
}

nlohmann::json ObjectiveReport(const std::filesystem::path& ref_dir,
                               const std::filesystem::path& test_dir,
                               const ObjectiveConfig& cfg) {
  const auto refs = WavFiles(ref_dir);
  const auto tests = WavFiles(test_dir);
  std::string unmatched;
  for (const auto& [stem, p] : refs) {
    if (!tests.contains(stem)) unmatched += " " + stem;
  }
  for (const auto& [stem, p] : tests) {
    if (!refs.contains(stem)) unmatched += " " + stem;
  }
  if (!unmatched.empty()) throw DataError("unmatched files:" + unmatched);
  if (refs.empty()) throw DataError("no WAV files in " + ref_dir.string());

  nlohmann::json files = nlohmann::json::array();
  double sum_spec = 0.0, sum_ms = 0.0;
  for (const auto& [stem, ref_path] : refs) {
    nlohmann::json row = ComparePair(data::LoadWav(ref_path), data::LoadWav(tests.at(stem)), cfg);
    sum_spec += row["spectral_distance"].get<double>();
    sum_ms += row["multiscale_distance"].get<double>();
    row["stem"] = stem;
    files.push_back(std::move(row));
  }
  const auto n = static_cast<double>(refs.size());
  return {{"files", files},
          {"mean", {{"spectral_distance", sum_spec / n}, {"multiscale_distance", sum_ms / n}}},
          {"config", {{"spectral_window", cfg.spectral_window}, {"multiscale", cfg.multiscale}}}};
}

}  // namespace pitchrave::eval
