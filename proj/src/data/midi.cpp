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

#include "pitchrave/data/midi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "pitchrave/common.hpp"

namespace pitchrave::data {
namespace {

constexpr std::uint32_t kDefaultTempo = 500000;  // microseconds per quarter note

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  bool done() const { return pos_ >= end_; }
  std::size_t pos() const { return pos_; }

  std::uint8_t U8() {
    if (pos_ >= end_) throw DataError("midi: unexpected end of data");
    return bytes_[pos_++];
  }
  std::uint8_t Peek() const {
    if (pos_ >= end_) throw DataError("midi: unexpected end of data");
    return bytes_[pos_];
  }
  std::uint32_t BigEndian(int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | U8();
    return v;
  }
  std::uint32_t Vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = U8();
      v = (v << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return v;
    }
    throw DataError("midi: variable-length quantity longer than 4 bytes");
  }
  void Skip(std::size_t n) {
    if (n > end_ - pos_) throw DataError("midi: event runs past end of track");
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

struct RawNote {
  std::uint64_t tick;
  bool on;
  int note;
  int velocity;
  int channel;
  std::size_t seq;
};

struct TempoChange {
  std::uint64_t tick;
  std::uint32_t usec_per_quarter;
};

// Maps ticks to seconds through a piecewise-constant tempo map.
class TickClock {
 public:
  TickClock(std::int16_t division, std::vector<TempoChange> tempos) {
    if (division < 0) {
      // SMPTE: high byte is -frames per second, low byte ticks per frame.
      const int fps = -(division >> 8);
      const int tpf = division & 0xFF;
      if (fps <= 0 || tpf <= 0) throw DataError("midi: invalid SMPTE division");
      smpte_seconds_per_tick_ = 1.0 / (fps == 29 ? 29.97 * tpf : static_cast<double>(fps * tpf));
      return;
    }
    if (division == 0) throw DataError("midi: zero ticks per quarter note");
    tpq_ = division;
    std::stable_sort(tempos.begin(), tempos.end(),
                     [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
    segments_.push_back({0, 0.0, kDefaultTempo});
    for (const TempoChange& t : tempos) {
      Segment& last = segments_.back();
      const double start = last.seconds + SegmentSeconds(last, t.tick);
      if (t.tick == last.tick) {
        last.usec_per_quarter = t.usec_per_quarter;
      } else {
        segments_.push_back({t.tick, start, t.usec_per_quarter});
      }
    }
  }

  double Seconds(std::uint64_t tick) const {
    if (smpte_seconds_per_tick_ > 0.0) return static_cast<double>(tick) * smpte_seconds_per_tick_;
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tick,
                               [](std::uint64_t t, const Segment& s) { return t < s.tick; });
    const Segment& s = *std::prev(it);
    return s.seconds + SegmentSeconds(s, tick);
  }

 private:
  struct Segment {
    std::uint64_t tick;
    double seconds;
    std::uint32_t usec_per_quarter;
  };

  double SegmentSeconds(const Segment& s, std::uint64_t tick) const {
    return static_cast<double>(tick - s.tick) * s.usec_per_quarter * 1e-6 / tpq_;
  }

  int tpq_ = 480;
  double smpte_seconds_per_tick_ = 0.0;
  std::vector<Segment> segments_;
};

std::string FormatSeconds(double s) {
  std::ostringstream os;
  os.precision(6);
  os << s << " s";
  return os.str();
}

void ParseTrack(Reader& r, std::vector<RawNote>& notes, std::vector<TempoChange>& tempos,
                std::uint64_t& last_tick) {
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  while (!r.done()) {
    tick += r.Vlq();
    std::uint8_t status = r.Peek();
    if (status & 0x80) {
      r.U8();
    } else {
      if (running == 0) throw DataError("midi: data byte without running status");
      status = running;
    }
    if (status == 0xFF) {
      const std::uint8_t type = r.U8();
      const std::uint32_t len = r.Vlq();
      if (type == 0x51) {
        if (len != 3) throw DataError("midi: tempo event with length " + std::to_string(len));
        tempos.push_back({tick, r.BigEndian(3)});
      } else {
        r.Skip(len);
      }
      last_tick = std::max(last_tick, tick);
      if (type == 0x2F) return;
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      r.Skip(r.Vlq());
      running = 0;
      continue;
    }
    if (status >= 0xF0) throw DataError("midi: unexpected system message in track");
    running = status;
    const int kind = status & 0xF0;
    const int channel = status & 0x0F;
    const int d1 = r.U8() & 0x7F;
    const int d2 = (kind == 0xC0 || kind == 0xD0) ? 0 : r.U8() & 0x7F;
    last_tick = std::max(last_tick, tick);
    if (kind == 0x90 || kind == 0x80) {
      const bool on = kind == 0x90 && d2 > 0;
      notes.push_back({tick, on, d1, d2, channel, notes.size()});
    }
  }
}

void PutVlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::array<std::uint8_t, 5> buf{};
  int n = 0;
  buf[n++] = v & 0x7F;
  while ((v >>= 7) != 0) buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

void PutBigEndian(std::vector<std::uint8_t>& out, std::uint32_t v, int n) {
  for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

MidiFile ParseMidi(std::span<const std::uint8_t> bytes) {
  Reader head(bytes, 0, bytes.size());
  if (bytes.size() < 14 || head.BigEndian(4) != 0x4D546864) {  // "MThd"
    throw DataError("midi: missing MThd header");
  }
  const std::uint32_t header_len = head.BigEndian(4);
  if (header_len < 6) throw DataError("midi: header chunk too short");
  MidiFile out;
  out.format = static_cast<int>(head.BigEndian(2));
  const auto declared_tracks = static_cast<int>(head.BigEndian(2));
  const auto division = static_cast<std::int16_t>(head.BigEndian(2));
  if (out.format != 0 && out.format != 1) {
    throw DataError("midi: unsupported format " + std::to_string(out.format));
  }
  head.Skip(header_len - 6);

  std::vector<RawNote> raw;
  std::vector<TempoChange> tempos;
  std::uint64_t last_tick = 0;
  std::size_t pos = head.pos();
  while (pos + 8 <= bytes.size()) {
    Reader chunk(bytes, pos, bytes.size());
    const std::uint32_t id = chunk.BigEndian(4);
    const std::uint32_t len = chunk.BigEndian(4);
    const std::size_t body = chunk.pos();
    if (len > bytes.size() - body) throw DataError("midi: chunk runs past end of file");
    if (id == 0x4D54726B) {  // "MTrk"
      Reader track(bytes, body, body + len);
      ParseTrack(track, raw, tempos, last_tick);
      ++out.tracks;
    }
    pos = body + len;
  }
  if (out.tracks == 0) throw DataError("midi: no MTrk chunks");
  if (out.tracks != declared_tracks) {
    out.warnings.push_back("midi: header declares " + std::to_string(declared_tracks) +
                           " tracks, found " + std::to_string(out.tracks));
  }
  if (out.format == 0 && out.tracks > 1) {
    out.warnings.push_back("midi: format 0 file with several tracks");
  }

  const TickClock clock(division, tempos);
  out.duration = clock.Seconds(last_tick);

  // Releases sort before attacks at the same tick so that a re-struck key is
  // not mistaken for an overlapping duplicate.
  std::sort(raw.begin(), raw.end(), [](const RawNote& a, const RawNote& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.on != b.on) return !a.on;
    return a.seq < b.seq;
  });

  struct Sounding {
    int depth = 0;
    double onset = 0.0;
    int velocity = 0;
    int channel = 0;
  };
  std::map<int, Sounding> active;
  for (const RawNote& e : raw) {
    const double t = clock.Seconds(e.tick);
    Sounding& s = active[e.note];
    if (e.on) {
      if (s.depth > 0) {
        out.warnings.push_back("midi: note " + std::to_string(e.note) + " struck again at " +
                               FormatSeconds(t) + " while sounding; merged");
      } else {
        s.onset = t;
        s.velocity = e.velocity;
        s.channel = e.channel;
      }
      ++s.depth;
    } else if (s.depth > 0 && --s.depth == 0) {
      out.notes.push_back({e.note, s.onset, t, s.velocity, s.channel});
    }
  }
  for (auto& [note, s] : active) {
    if (s.depth > 0) {
      out.warnings.push_back("midi: note " + std::to_string(note) +
                             " never released; closed at end of file");
      out.notes.push_back({note, s.onset, out.duration, s.velocity, s.channel});
    }
  }
  std::sort(out.notes.begin(), out.notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return a.onset != b.onset ? a.onset < b.onset : a.note < b.note;
  });
  return out;
}

MidiFile ReadMidi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open MIDI file " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  try {
    return ParseMidi(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> EncodeMidi(std::span<const NoteEvent> notes, int ticks_per_quarter) {
  if (ticks_per_quarter <= 0 || ticks_per_quarter > 0x7FFF) {
    throw UsageError("midi: ticks per quarter out of range");
  }
  const double ticks_per_second = 1e6 / kDefaultTempo * ticks_per_quarter;
  std::vector<RawNote> events;
  for (const NoteEvent& n : notes) {
    if (n.note < 0 || n.note > 127 || n.offset < n.onset || n.onset < 0.0) {
      throw UsageError("midi: invalid note event for note " + std::to_string(n.note));
    }
    const auto on = static_cast<std::uint64_t>(std::llround(n.onset * ticks_per_second));
    const auto off = static_cast<std::uint64_t>(std::llround(n.offset * ticks_per_second));
    const int vel = std::clamp(n.velocity > 0 ? n.velocity : 64, 1, 127);
    events.push_back({on, true, n.note, vel, n.channel & 0x0F, events.size()});
    events.push_back({off, false, n.note, 0, n.channel & 0x0F, events.size()});
  }
  std::sort(events.begin(), events.end(), [](const RawNote& a, const RawNote& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.on != b.on) return !a.on;
    return a.seq < b.seq;
  });

  std::vector<std::uint8_t> track;
  PutVlq(track, 0);
  track.insert(track.end(), {0xFF, 0x51, 0x03});
  PutBigEndian(track, kDefaultTempo, 3);
  std::uint64_t tick = 0;
  for (const RawNote& e : events) {
    PutVlq(track, static_cast<std::uint32_t>(e.tick - tick));
    tick = e.tick;
    track.push_back(static_cast<std::uint8_t>((e.on ? 0x90 : 0x80) | e.channel));
    track.push_back(static_cast<std::uint8_t>(e.note));
    track.push_back(static_cast<std::uint8_t>(e.on ? e.velocity : 64));
  }
  PutVlq(track, 0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd'};
  PutBigEndian(out, 6, 4);
  PutBigEndian(out, 0, 2);
  PutBigEndian(out, 1, 2);
  PutBigEndian(out, static_cast<std::uint32_t>(ticks_per_quarter), 2);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  PutBigEndian(out, static_cast<std::uint32_t>(track.size()), 4);
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

void WriteMidi(const std::filesystem::path& path, std::span<const NoteEvent> notes,
               int ticks_per_quarter) {
  const auto bytes = EncodeMidi(notes, ticks_per_quarter);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write MIDI file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

double RollFrameRate(std::size_t n_bands) {
  if (n_bands == 0) throw UsageError("roll frame rate: n_bands must be positive");
  return static_cast<double>(kSampleRate) / static_cast<double>(n_bands);
}

PianoRoll MidiToPianoRoll(std::span<const NoteEvent> notes, std::size_t total_frames,
                          double frame_rate) {
  if (!(frame_rate > 0.0)) throw UsageError("piano roll: frame rate must be positive");
  for (const NoteEvent& n : notes) {
    if (n.note < kLowestMidiNote || n.note >= kLowestMidiNote + kNumNotes) {
      throw DataError("piano roll: note " + std::to_string(n.note) +
                      " outside the 88-key range 21..108");
    }
  }
  PianoRoll roll(total_frames);
  for (const NoteEvent& n : notes) {
    const double a = n.onset * frame_rate;
    const double b = n.offset * frame_rate;
    if (!(b > a) || b <= 0.0) continue;
    // Frame t overlaps (a, b) iff t < b and t + 1 > a.
    const double first = std::max(0.0, std::floor(a));
    const double last = std::min(static_cast<double>(total_frames), std::ceil(b));
    const std::size_t row = PianoRoll::RowForMidiNote(n.note);
    for (auto t = static_cast<std::size_t>(first); static_cast<double>(t) < last; ++t) {
      roll.data(row, t) = 1.0;
    }
  }
  return roll;
}

}  // namespace pitchrave::data
