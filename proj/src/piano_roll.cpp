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

#include "pitchrave/piano_roll.hpp"

#include <algorithm>
#include <string>

namespace pitchrave {

std::size_t PianoRoll::RowForMidiNote(int note) {
  if (note < kLowestMidiNote || note >= kLowestMidiNote + kNumNotes) {
    throw UsageError("piano roll: MIDI note " + std::to_string(note) + " outside 21..108");
  }
  return static_cast<std::size_t>(note - kLowestMidiNote);
}

PianoRoll PianoRoll::Slice(std::size_t start, std::size_t count) const {
  if (start + count > n_frames()) {
    throw UsageError("piano roll: slice [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") beyond " + std::to_string(n_frames()) +
                     " frames");
  }
  PianoRoll out;
  out.data = Matrix(n_notes(), count);
  for (std::size_t r = 0; r < n_notes(); ++r) {
    auto src = data.row(r).subspan(start, count);
    std::copy(src.begin(), src.end(), out.data.row(r).begin());
  }
  return out;
}

void PianoRoll::Validate() const {
  for (double v : data.data()) {
    if (v != 0.0 && v != 1.0) throw DataError("piano roll: entries must be 0 or 1");
  }
}

Matrix MergeAuxTemporal(const PianoRoll& roll, std::size_t stride) {
  if (stride == 0 || roll.n_frames() % stride != 0) {
    throw UsageError("merge_aux_temporal: " + std::to_string(roll.n_frames()) +
                     " frames not divisible by stride " + std::to_string(stride));
  }
  const std::size_t out_frames = roll.n_frames() / stride;
  Matrix merged(roll.n_notes(), out_frames);
  for (std::size_t r = 0; r < roll.n_notes(); ++r) {
    auto row = roll.data.row(r);
    for (std::size_t t = 0; t < out_frames; ++t) {
      auto window = row.subspan(t * stride, stride);
      merged(r, t) = *std::max_element(window.begin(), window.end());
    }
  }
  return merged;
}

}  // namespace pitchrave
