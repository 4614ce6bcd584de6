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

#ifndef PITCHRAVE_EVAL_MUSHRA_HPP_
#define PITCHRAVE_EVAL_MUSHRA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pitchrave/audio.hpp"

namespace pitchrave::eval {

inline constexpr const char* kHiddenReference = "hidden_reference";
inline constexpr const char* kAnchor = "anchor";

// One trial of the listening test as declared by the experimenter.
struct TrialSpec {
  std::string id;
  AudioBuffer reference;
  std::map<std::string, AudioBuffer> systems;  // system name -> output
};

struct StimuliManifest {
  std::vector<TrialSpec> trials;
  std::uint64_t seed = 0;
};

// Reads {"seed": s, "trials": [{"id", "reference", "systems": {name: wav}}]}
// with paths relative to the manifest file. Throws DataError when a trial
// has no reference or no system.
StimuliManifest LoadStimuliManifest(const std::filesystem::path& path);

struct Stimulus {
  std::string token;   // opaque label shown to the listener
  std::string system;  // resolved name; never sent to clients
  const AudioBuffer* audio = nullptr;
};

struct SessionTrial {
  std::string id;
  std::string reference_token;
  const AudioBuffer* reference = nullptr;
  std::vector<Stimulus> stimuli;  // presentation order
  // order[i] is the index, in declaration order (systems sorted by name,
  // then hidden reference, then anchor), of the stimulus presented at i.
  std::vector<std::size_t> order;
};

struct MushraSession {
  std::string id;
  std::string listener;
  std::uint64_t seed = 0;
  std::vector<SessionTrial> trials;

  // Client view: trial ids and tokens only.
  nlohmann::json Blinded() const;
  // Audit view including systems and the stored permutation.
  nlohmann::json Audit() const;
};

// Precomputed anchors, kept alongside the manifest they were built from.
struct StimulusPool {
  explicit StimulusPool(StimuliManifest manifest);

  StimuliManifest manifest;
  std::vector<AudioBuffer> anchors;  // one per trial
};

// Adds a hidden reference and the high-pass anchor to each trial, assigns
// opaque tokens and shuffles the presentation order with `seed`. The result
// points into `pool`, which must outlive it. Throws UsageError on a trial
// without systems and DataError on a missing reference.
MushraSession BuildSession(const StimulusPool& pool, const std::string& listener,
                           std::uint64_t seed);

struct RatingRecord {
  std::string listener;
  std::string trial;
  std::map<std::string, double> scores;  // system -> score in [0, 100]
  std::string timestamp;                 // ISO-8601 UTC submission time
};

nlohmann::json ToJson(const RatingRecord& r);
RatingRecord RatingFromJson(const nlohmann::json& j);  // throws DataError

struct SystemScore {
  std::string system;
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  std::optional<double> ci_half_width;  // Student-t 95 %; empty when n < 2

  std::optional<double> ci_low() const;
  std::optional<double> ci_high() const;
};

// Per-system mean over (listener x trial) ratings with a 95 % Student-t
// interval. Systems are returned sorted by name. Throws UsageError when
// there are no records.
std::vector<SystemScore> AggregateScores(const std::vector<RatingRecord>& records);
nlohmann::json ReportJson(const std::vector<SystemScore>& scores);

// t quantile used for the interval, exposed for tests.
double StudentTQuantile(double p, double dof);

// Append-only JSON-lines store with one record per (listener, trial).
class RatingsStore {
 public:
  // Loads existing records; a missing file is an empty store.
  explicit RatingsStore(std::filesystem::path path);

  // Returns false (and writes nothing) for a duplicate (listener, trial).
  bool Append(const RatingRecord& record);
  std::vector<RatingRecord> Records() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::vector<RatingRecord> records_;
};

std::vector<RatingRecord> ReadRatings(const std::filesystem::path& path);

}  // namespace pitchrave::eval

#endif  // PITCHRAVE_EVAL_MUSHRA_HPP_
