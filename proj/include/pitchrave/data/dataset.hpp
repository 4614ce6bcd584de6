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

#ifndef PITCHRAVE_DATA_DATASET_HPP_
#define PITCHRAVE_DATA_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pitchrave/ad/tensor.hpp"
#include "pitchrave/audio.hpp"
#include "pitchrave/data/midi.hpp"
#include "pitchrave/piano_roll.hpp"

namespace pitchrave::data {

// Audio with a frame-aligned piano roll: roll.n_frames() * n_bands equals
// audio.size().
struct AlignedExample {
  std::string id;
  AudioBuffer audio;
  PianoRoll roll;
};

// Throws DataError unless the frame-count invariant holds.
void CheckAligned(const AlignedExample& ex, std::size_t n_bands);

// Reads a WAV file and converts it to 16 kHz mono.
AudioBuffer LoadWav(const std::filesystem::path& path);

// Pads the audio with trailing zeros to a multiple of n_bands and rasterises
// the notes at one frame per multiband frame.
AlignedExample MakeAlignedExample(std::string id, AudioBuffer audio,
                                  const std::vector<NoteEvent>& notes,
                                  std::size_t n_bands);

// A batch in model layout: audio (B, 1, L), aux (B, n_notes, L / n_bands).
struct Batch {
  ad::Tensor audio;
  ad::Tensor aux;
};

struct Crop {
  std::size_t example = 0;
  std::size_t offset = 0;  // samples; always a multiple of n_bands
};

Batch MakeBatch(const std::vector<AlignedExample>& examples, const std::vector<Crop>& crops,
                std::size_t length, std::size_t n_bands);

struct DatasetConfig {
  std::size_t n_bands = 16;
  double validation_fraction = 0.05;
  std::uint64_t seed = 0;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<AlignedExample> train, std::vector<AlignedExample> validation,
          std::size_t n_bands);

  // Splits the examples: round(fraction * n) whole examples go to validation
  // after a seeded shuffle. When that rounds to zero the last `fraction` of
  // every example (aligned to `granularity` samples) is held out instead, so
  // single-clip runs still have a validation curve.
  static Dataset Split(std::vector<AlignedExample> examples, const DatasetConfig& cfg,
                       std::size_t granularity);

  const std::vector<AlignedExample>& train() const { return train_; }
  const std::vector<AlignedExample>& validation() const { return validation_; }
  std::size_t n_bands() const { return n_bands_; }
  bool tail_split() const { return tail_split_; }

  // Shortest training example, in samples.
  std::size_t min_train_length() const;

  // Random crops of `length` samples from training examples long enough to
  // hold them, at offsets that are multiples of n_bands. Throws UsageError if
  // no training example is long enough.
  std::vector<Crop> SampleCrops(std::mt19937_64& rng, std::size_t batch_size,
                                std::size_t length) const;

 private:
  std::vector<AlignedExample> train_;
  std::vector<AlignedExample> validation_;
  std::size_t n_bands_ = 16;
  bool tail_split_ = false;
};

struct DatasetBuild {
  Dataset dataset;
  nlohmann::json manifest;  // {pairs: [{audio, midi}], seed, split: {train, validation}}
  std::vector<std::string> warnings;
};

// Pairs `<stem>.wav` in audio_dir with `<stem>.mid` / `<stem>.midi` in
// midi_dir. Unmatched stems are skipped with a warning; no pairs at all is a
// DataError.
DatasetBuild MakeDataset(const std::filesystem::path& audio_dir,
                         const std::filesystem::path& midi_dir, const DatasetConfig& cfg,
                         std::size_t granularity);

}  // namespace pitchrave::data

#endif  // PITCHRAVE_DATA_DATASET_HPP_
