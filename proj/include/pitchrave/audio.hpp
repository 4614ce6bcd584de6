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

#ifndef PITCHRAVE_AUDIO_HPP_
#define PITCHRAVE_AUDIO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pitchrave/common.hpp"

namespace pitchrave {

// Mono sample sequence with its sample rate. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Throws NumericalError on NaN/Inf and UsageError on a non-positive rate.
  void Validate() const;
};

// Interleaved multi-channel PCM as read from disk, before preprocessing.
struct RawAudio {
  std::vector<double> interleaved;
  int sample_rate = 0;
  int channels = 0;
};

enum class WavEncoding { kPcm16, kFloat32 };

// RIFF/WAVE reader for PCM-16 and IEEE float-32. PCM values map to
// int16 / 32768.
RawAudio ReadWav(const std::filesystem::path& path);
RawAudio DecodeWav(std::span<const std::uint8_t> bytes);

// Writes mono PCM-16 (values clamped to the int16 range after scaling by
// 32768) or float-32.
void WriteWav(const std::filesystem::path& path, const AudioBuffer& audio,
              WavEncoding encoding = WavEncoding::kPcm16);
std::vector<std::uint8_t> EncodeWav(const AudioBuffer& audio,
                                    WavEncoding encoding = WavEncoding::kPcm16);

double Rms(std::span<const double> x);

}  // namespace pitchrave

#endif  // PITCHRAVE_AUDIO_HPP_
