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

#include "pitchrave/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "pitchrave/common.hpp"
#include "pitchrave/dsp/filters.hpp"

namespace pitchrave::data {
namespace {

AlignedExample SliceExample(const AlignedExample& ex, std::size_t start, std::size_t length,
                            std::size_t n_bands, const std::string& suffix) {
  AlignedExample out;
  out.id = ex.id + suffix;
  out.audio.sample_rate = ex.audio.sample_rate;
  out.audio.samples.assign(ex.audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                           ex.audio.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
  out.roll = ex.roll.Slice(start / n_bands, length / n_bands);
  return out;
}

}  // namespace

void CheckAligned(const AlignedExample& ex, std::size_t n_bands) {
  if (n_bands == 0 || ex.roll.n_frames() * n_bands != ex.audio.size() ||
      ex.roll.n_notes() != static_cast<std::size_t>(kNumNotes)) {
    throw DataError("example '" + ex.id + "': " + std::to_string(ex.roll.n_frames()) +
                    " roll frames do not match " + std::to_string(ex.audio.size()) +
                    " samples at " + std::to_string(n_bands) + " bands");
  }
}

AudioBuffer LoadWav(const std::filesystem::path& path) {
  const RawAudio raw = ReadWav(path);
  try {
    return dsp::Preprocess(raw.interleaved, raw.sample_rate, raw.channels);
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

AlignedExample MakeAlignedExample(std::string id, AudioBuffer audio,
                                  const std::vector<NoteEvent>& notes, std::size_t n_bands) {
  if (n_bands == 0) throw UsageError("aligned example: n_bands must be positive");
  audio.Validate();
  const std::size_t rem = audio.size() % n_bands;
  if (rem != 0) audio.samples.resize(audio.size() + n_bands - rem, 0.0);
  AlignedExample ex;
  ex.id = std::move(id);
  ex.roll = MidiToPianoRoll(notes, audio.size() / n_bands, RollFrameRate(n_bands));
  ex.audio = std::move(audio);
  return ex;
}

Batch MakeBatch(const std::vector<AlignedExample>& examples, const std::vector<Crop>& crops,
                std::size_t length, std::size_t n_bands) {
  if (crops.empty()) throw UsageError("batch: no crops");
  if (n_bands == 0 || length == 0 || length % n_bands != 0) {
    throw UsageError("batch: crop length must be a positive multiple of n_bands");
  }
  const std::size_t frames = length / n_bands;
  std::vector<Real> audio(crops.size() * length);
  std::vector<Real> aux(crops.size() * kNumNotes * frames);
  for (std::size_t b = 0; b < crops.size(); ++b) {
    const Crop& c = crops[b];
    const AlignedExample& ex = examples.at(c.example);
    if (c.offset % n_bands != 0 || c.offset + length > ex.audio.size()) {
      throw UsageError("batch: crop at " + std::to_string(c.offset) + " does not fit '" +
                       ex.id + "'");
    }
    for (std::size_t i = 0; i < length; ++i) {
      audio[b * length + i] = static_cast<Real>(ex.audio.samples[c.offset + i]);
    }
    const std::size_t f0 = c.offset / n_bands;
    for (std::size_t n = 0; n < static_cast<std::size_t>(kNumNotes); ++n) {
      for (std::size_t t = 0; t < frames; ++t) {
        aux[(b * kNumNotes + n) * frames + t] = static_cast<Real>(ex.roll.data(n, f0 + t));
      }
    }
  }
  Batch out;
  out.audio = ad::Tensor::FromVector({crops.size(), 1, length}, std::move(audio));
  out.aux = ad::Tensor::FromVector({crops.size(), static_cast<std::size_t>(kNumNotes), frames},
                                   std::move(aux));
  return out;
}

Dataset::Dataset(std::vector<AlignedExample> train, std::vector<AlignedExample> validation,
                 std::size_t n_bands)
    : train_(std::move(train)), validation_(std::move(validation)), n_bands_(n_bands) {
  if (train_.empty()) throw DataError("dataset: no training examples");
  for (const auto& ex : train_) CheckAligned(ex, n_bands_);
  for (const auto& ex : validation_) CheckAligned(ex, n_bands_);
}

Dataset Dataset::Split(std::vector<AlignedExample> examples, const DatasetConfig& cfg,
                       std::size_t granularity) {
  if (examples.empty()) throw DataError("dataset: no examples");
  if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0) {
    throw UsageError("dataset: validation fraction must lie in [0, 1)");
  }
  if (granularity == 0 || granularity % cfg.n_bands != 0) {
    throw UsageError("dataset: split granularity must be a multiple of n_bands");
  }
  const auto n_val = static_cast<std::size_t>(
      std::llround(cfg.validation_fraction * static_cast<double>(examples.size())));
  if (n_val > 0) {
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> is_val(examples.size(), false);
    for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
    std::vector<AlignedExample> train, val;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      (is_val[i] ? val : train).push_back(std::move(examples[i]));
    }
    return Dataset(std::move(train), std::move(val), cfg.n_bands);
  }

  std::vector<AlignedExample> train, val;
  for (AlignedExample& ex : examples) {
    const std::size_t len = ex.audio.size();
    const auto want = static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(len));
    const std::size_t hold = std::max(granularity, want / granularity * granularity);
    if (cfg.validation_fraction == 0.0 || hold >= len) {
      train.push_back(std::move(ex));
      continue;
    }
    val.push_back(SliceExample(ex, len - hold, hold, cfg.n_bands, "#tail"));
    train.push_back(SliceExample(ex, 0, len - hold, cfg.n_bands, ""));
  }
  Dataset out(std::move(train), std::move(val), cfg.n_bands);
  out.tail_split_ = !out.validation_.empty();
  return out;
}

std::size_t Dataset::min_train_length() const {
  std::size_t m = train_.front().audio.size();
  for (const auto& ex : train_) m = std::min(m, ex.audio.size());
  return m;
}

std::vector<Crop> Dataset::SampleCrops(std::mt19937_64& rng, std::size_t batch_size,
                                       std::size_t length) const {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    if (train_[i].audio.size() >= length) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw UsageError("dataset: crop length " + std::to_string(length) +
                     " exceeds every training example");
  }
  std::vector<Crop> crops(batch_size);
  for (Crop& c : crops) {
    c.example = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];
    const std::size_t slots = (train_[c.example].audio.size() - length) / n_bands_;
    c.offset = std::uniform_int_distribution<std::size_t>(0, slots)(rng) * n_bands_;
  }
  return crops;
}

DatasetBuild MakeDataset(const std::filesystem::path& audio_dir,
                         const std::filesystem::path& midi_dir, const DatasetConfig& cfg,
                         std::size_t granularity) {
  namespace fs = std::filesystem;
  for (const auto& dir : {audio_dir, midi_dir}) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  }
  std::map<std::string, fs::path> audio, midi;
  for (const auto& e : fs::directory_iterator(audio_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") {
      audio[e.path().stem().string()] = e.path();
    }
  }
  for (const auto& e : fs::directory_iterator(midi_dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".mid" || ext == ".midi")) {
      midi[e.path().stem().string()] = e.path();
    }
  }

  DatasetBuild out;
  std::vector<AlignedExample> examples;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [stem, wav] : audio) {
    auto it = midi.find(stem);
    if (it == midi.end()) {
      out.warnings.push_back("no MIDI file for audio '" + stem + "'; skipped");
      continue;
    }
    MidiFile m = ReadMidi(it->second);
    for (const auto& w : m.warnings) out.warnings.push_back(stem + ": " + w);
    examples.push_back(MakeAlignedExample(stem, LoadWav(wav), m.notes, cfg.n_bands));
    pairs.push_back({{"audio", wav.string()}, {"midi", it->second.string()}});
  }
  for (const auto& [stem, path] : midi) {
    if (!audio.contains(stem)) out.warnings.push_back("no audio for MIDI '" + stem + "'; skipped");
  }
  if (examples.empty()) {
    throw DataError("dataset: no matched audio/MIDI pairs in " + audio_dir.string() + " and " +
                    midi_dir.string());
  }
  out.dataset = Dataset::Split(std::move(examples), cfg, granularity);
  nlohmann::json train = nlohmann::json::array(), val = nlohmann::json::array();
  for (const auto& ex : out.dataset.train()) train.push_back(ex.id);
  for (const auto& ex : out.dataset.validation()) val.push_back(ex.id);
  out.manifest = {{"pairs", pairs},
                  {"seed", cfg.seed},
                  {"validation_fraction", cfg.validation_fraction},
                  {"split", {{"train", train}, {"validation", val}, {"tail", out.dataset.tail_split()}}}};
  return out;
}

}  // namespace pitchrave::data
