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

#ifndef PITCHRAVE_PIANO_ROLL_HPP_
#define PITCHRAVE_PIANO_ROLL_HPP_

#include <cstddef>

#include "pitchrave/common.hpp"
#include "pitchrave/matrix.hpp"

namespace pitchrave {

// Binary note x frame activations. Row i is MIDI note 21 + i. Several rows
// may be active in one frame (polyphony).
struct PianoRoll {
  Matrix data;

  PianoRoll() = default;
  explicit PianoRoll(std::size_t frames) : data(kNumNotes, frames) {}

  std::size_t n_notes() const { return data.rows(); }
  std::size_t n_frames() const { return data.cols(); }

  static std::size_t RowForMidiNote(int note);  // throws UsageError outside 21..108
  static int MidiNoteForRow(std::size_t row) { return kLowestMidiNote + static_cast<int>(row); }

  // Frames [start, start + count).
  PianoRoll Slice(std::size_t start, std::size_t count) const;

  // Throws DataError unless every entry is 0 or 1.
  void Validate() const;
};

// Max-pools each row over consecutive windows of `stride` frames, giving an
// n_notes x (n_frames / stride) matrix. Throws UsageError when n_frames is
// not divisible by stride.
Matrix MergeAuxTemporal(const PianoRoll& roll, std::size_t stride);

}  // namespace pitchrave

#endif  // PITCHRAVE_PIANO_ROLL_HPP_
