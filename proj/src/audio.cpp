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

#include "pitchrave/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pitchrave {

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T Read() {
    T value;
    Need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string ReadTag() {
    Need(4);
    std::string tag(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return tag;
  }

  void Skip(std::size_t n) {
    Need(n);
    pos_ += n;
  }

  std::span<const std::uint8_t> Take(std::size_t n) {
    Need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("wav: truncated file");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void Put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

void AudioBuffer::Validate() const {
  if (sample_rate <= 0) throw UsageError("audio: sample rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw NumericalError("audio: non-finite sample");
  }
}

RawAudio DecodeWav(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  if (reader.ReadTag() != "RIFF") throw DataError("wav: missing RIFF header");
  reader.Read<std::uint32_t>();
  if (reader.ReadTag() != "WAVE") throw DataError("wav: missing WAVE tag");

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> payload;
  bool have_data = false;

  while (reader.remaining() >= 8 && !have_data) {
    const std::string tag = reader.ReadTag();
    const std::uint32_t size = reader.Read<std::uint32_t>();
    if (tag == "fmt ") {
      if (size < 16) throw DataError("wav: fmt chunk too small");
      format = reader.Read<std::uint16_t>();
      channels = reader.Read<std::uint16_t>();
      rate = reader.Read<std::uint32_t>();
      reader.Read<std::uint32_t>();  // byte rate
      reader.Read<std::uint16_t>();  // block align
      bits = reader.Read<std::uint16_t>();
      std::size_t rest = size - 16;
      if (format == kFormatExtensible && rest >= 24) {
        reader.Skip(8);
        format = reader.Read<std::uint16_t>();
        rest -= 10;
      }
      reader.Skip(rest + (size & 1u));
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw DataError("wav: data chunk before fmt chunk");
      // Streaming writers leave the size at 0xFFFFFFFF; take what is there.
      if (size != 0xFFFFFFFFu && size > reader.remaining()) {
        throw DataError("wav: truncated data chunk (" + std::to_string(size) + " bytes declared, " +
                        std::to_string(reader.remaining()) + " present)");
      }
      payload = reader.Take(std::min<std::size_t>(size, reader.remaining()));
      have_data = true;
    } else {
      reader.Skip(std::min<std::size_t>(size + (size & 1u), reader.remaining()));
    }
  }
  if (!have_fmt) throw DataError("wav: missing fmt chunk");
  if (!have_data) throw DataError("wav: missing data chunk");
  if (channels == 0) throw DataError("wav: zero channels");
  if (rate == 0) throw DataError("wav: zero sample rate");

  RawAudio out;
  out.sample_rate = static_cast<int>(rate);
  out.channels = channels;
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = payload.size() / 2;
    out.interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, payload.data() + 2 * i, 2);
      out.interleaved[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = payload.size() / 4;
    out.interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, payload.data() + 4 * i, 4);
      out.interleaved[i] = v;
    }
  } else {
    throw DataError("wav: unsupported codec (format " + std::to_string(format) +
                    ", " + std::to_string(bits) + " bits); expected PCM-16 or float-32");
  }
  out.interleaved.resize(out.interleaved.size() - out.interleaved.size() % channels);
  return out;
}

RawAudio ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " (" + path.string() + ")");
  }
}

std::vector<std::uint8_t> EncodeWav(const AudioBuffer& audio, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(audio.size() * bytes_per_sample);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  Put<std::uint32_t>(out, 36 + data_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  Put<std::uint32_t>(out, 16);
  Put<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  Put<std::uint16_t>(out, 1);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate));
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate) * bytes_per_sample);
  Put<std::uint16_t>(out, static_cast<std::uint16_t>(bytes_per_sample));
  Put<std::uint16_t>(out, bits);
  PutTag(out, "data");
  Put<std::uint32_t>(out, data_size);
  for (double s : audio.samples) {
    if (pcm) {
      const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      Put<std::int16_t>(out, static_cast<std::int16_t>(scaled));
    } else {
      Put<float>(out, static_cast<float>(s));
    }
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const AudioBuffer& audio,
              WavEncoding encoding) {
  const auto bytes = EncodeWav(audio, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("wav: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

double Rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace pitchrave
