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

#ifndef PITCHRAVE_DATA_MIDI_HPP_
#define PITCHRAVE_DATA_MIDI_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pitchrave/piano_roll.hpp"

namespace pitchrave::data {

// One sounding interval, note-on to note-off. Velocity is kept for
// inspection only; rolls are binary.
struct NoteEvent {
  int note = 0;
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds
  int velocity = 0;
  int channel = 0;
};

struct MidiFile {
  int format = 0;
  int tracks = 0;
  std::vector<NoteEvent> notes;  // sorted by (onset, note)
  double duration = 0.0;         // seconds until the last event
  std::vector<std::string> warnings;
};

// Standard MIDI File, formats 0 and 1, with tempo-map aware timing and SMPTE
// divisions. Velocity-zero note-ons count as note-offs. A note-on for a key
// that is already sounding is merged into the running interval (the key is
// released once every matching note-off arrived) and reported as a warning.
// Sustain pedal messages are ignored. Throws DataError on malformed input.
MidiFile ParseMidi(std::span<const std::uint8_t> bytes);
MidiFile ReadMidi(const std::filesystem::path& path);

// Format-0 file at 120 bpm with `ticks_per_quarter` resolution. Times are
// rounded to the nearest tick. Intended for fixtures.
std::vector<std::uint8_t> EncodeMidi(std::span<const NoteEvent> notes,
                                     int ticks_per_quarter = 480);
void WriteMidi(const std::filesystem::path& path, std::span<const NoteEvent> notes,
               int ticks_per_quarter = 480);

// Roll frame rate that gives one frame per multiband frame.
double RollFrameRate(std::size_t n_bands);

// roll(i, t) = 1 iff note 21 + i sounds for a positive duration inside
// [t, t + 1) / frame_rate seconds. Throws DataError naming the first note
// outside 21..108.
PianoRoll MidiToPianoRoll(std::span<const NoteEvent> notes, std::size_t total_frames,
                          double frame_rate);

}  // namespace pitchrave::data

#endif  // PITCHRAVE_DATA_MIDI_HPP_
