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

#include "pitchrave/eval/mushra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "pitchrave/common.hpp"
#include "pitchrave/data/dataset.hpp"
#include "pitchrave/dsp/filters.hpp"

namespace pitchrave::eval {
namespace {

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string Token(std::mt19937_64& rng) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

StimuliManifest LoadStimuliManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stimuli manifest " + path.string());
  StimuliManifest out;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    const auto base = path.parent_path();
    out.seed = j.value("seed", std::uint64_t{0});
    std::set<std::string> ids;
    for (const auto& t : j.at("trials")) {
      TrialSpec trial;
      trial.id = t.at("id").get<std::string>();
      if (!ids.insert(trial.id).second) throw DataError("duplicate trial id '" + trial.id + "'");
      if (!t.contains("reference") || !t["reference"].is_string()) {
        throw DataError("trial '" + trial.id + "' has no reference");
      }
      trial.reference = data::LoadWav(base / t["reference"].get<std::string>());
      for (const auto& [name, file] : t.at("systems").items()) {
        if (name == kHiddenReference || name == kAnchor) {
          throw DataError("system name '" + name + "' is reserved");
        }
        trial.systems[name] = data::LoadWav(base / file.get<std::string>());
      }
      if (trial.systems.empty()) throw DataError("trial '" + trial.id + "' lists no systems");
      out.trials.push_back(std::move(trial));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed stimuli manifest: " + std::string(e.what()));
  }
  if (out.trials.empty()) throw DataError("stimuli manifest has no trials");
  return out;
}

StimulusPool::StimulusPool(StimuliManifest m) : manifest(std::move(m)) {
  for (const TrialSpec& t : manifest.trials) {
    if (t.reference.empty()) throw DataError("trial '" + t.id + "' has an empty reference");
    anchors.push_back(dsp::MakeAnchor(t.reference));
  }
}

MushraSession BuildSession(const StimulusPool& pool, const std::string& listener,
                           std::uint64_t seed) {
  MushraSession s;
  s.id = listener;
  s.listener = listener;
  s.seed = seed;
  std::mt19937_64 rng(seed ^ Fnv1a(listener));
  std::set<std::string> used;
  auto fresh_token = [&]() {
    std::string t;
    do {
      t = Token(rng);
    } while (!used.insert(t).second);
    return t;
  };
  for (std::size_t i = 0; i < pool.manifest.trials.size(); ++i) {
    const TrialSpec& spec = pool.manifest.trials[i];
    if (spec.reference.empty()) throw DataError("trial '" + spec.id + "' has no reference");
    if (spec.systems.empty()) throw UsageError("trial '" + spec.id + "' lists no systems");
    SessionTrial trial;
    trial.id = spec.id;
    trial.reference = &spec.reference;
    trial.reference_token = fresh_token();
    std::vector<Stimulus> declared;
    for (const auto& [name, audio] : spec.systems) declared.push_back({"", name, &audio});
    declared.push_back({"", kHiddenReference, &spec.reference});
    declared.push_back({"", kAnchor, &pool.anchors[i]});
    trial.order.resize(declared.size());
    std::iota(trial.order.begin(), trial.order.end(), 0);
    std::shuffle(trial.order.begin(), trial.order.end(), rng);
    for (std::size_t k : trial.order) {
      Stimulus st = declared[k];
      st.token = fresh_token();
      trial.stimuli.push_back(st);
    }
    s.trials.push_back(std::move(trial));
  }
  return s;
}

nlohmann::json MushraSession::Blinded() const {
  nlohmann::json trials_json = nlohmann::json::array();
  for (const SessionTrial& t : trials) {
    nlohmann::json tokens = nlohmann::json::array();
    for (const Stimulus& st : t.stimuli) tokens.push_back(st.token);
    trials_json.push_back({{"trial", t.id}, {"reference", t.reference_token}, {"stimuli", tokens}});
  }
  return {{"session", id}, {"trials", trials_json}};
}

nlohmann::json MushraSession::Audit() const {
  nlohmann::json trials_json = nlohmann::json::array();
  for (const SessionTrial& t : trials) {
    nlohmann::json stimuli = nlohmann::json::array();
    for (const Stimulus& st : t.stimuli) {
      stimuli.push_back({{"token", st.token}, {"system", st.system}});
    }
    trials_json.push_back({{"trial", t.id},
                           {"reference", t.reference_token},
                           {"stimuli", stimuli},
                           {"order", t.order}});
  }
  return {{"session", id}, {"listener", listener}, {"seed", seed}, {"trials", trials_json}};
}

nlohmann::json ToJson(const RatingRecord& r) {
  return {{"listener", r.listener},
          {"trial", r.trial},
          {"scores", r.scores},
          {"timestamp", r.timestamp}};
}

RatingRecord RatingFromJson(const nlohmann::json& j) {
  try {
    RatingRecord r;
    r.listener = j.at("listener").get<std::string>();
    r.trial = j.at("trial").get<std::string>();
    r.scores = j.at("scores").get<std::map<std::string, double>>();
    r.timestamp = j.value("timestamp", "");
    for (const auto& [system, score] : r.scores) {
      if (!(score >= 0.0 && score <= 100.0)) {
        throw DataError("score for '" + system + "' outside [0, 100]");
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed rating record: " + std::string(e.what()));
  }
}

std::optional<double> SystemScore::ci_low() const {
  if (!ci_half_width) return std::nullopt;
  return mean - *ci_half_width;
}

std::optional<double> SystemScore::ci_high() const {
  if (!ci_half_width) return std::nullopt;
  return mean + *ci_half_width;
}

double StudentTQuantile(double p, double dof) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

std::vector<SystemScore> AggregateScores(const std::vector<RatingRecord>& records) {
  if (records.empty()) throw UsageError("aggregate: no rating records");
  std::map<std::string, std::vector<double>> by_system;
  for (const RatingRecord& r : records) {
    for (const auto& [system, score] : r.scores) by_system[system].push_back(score);
  }
  std::vector<SystemScore> out;
  for (auto& [system, scores] : by_system) {
    // Sorting makes the sums independent of record order.
    std::sort(scores.begin(), scores.end());
    SystemScore s;
    s.system = system;
    s.n = scores.size();
    const auto n = static_cast<double>(s.n);
    // Two-pass mean: the correction term removes the rounding drift of the
    // plain sum, so constant scores aggregate to exactly that score.
    s.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double residual = 0.0;
    for (double v : scores) residual += v - s.mean;
    s.mean += residual / n;
    if (s.n >= 2) {
      double ss = 0.0;
      for (double v : scores) ss += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(ss / (n - 1.0));
      s.ci_half_width = StudentTQuantile(0.975, n - 1.0) * s.stddev / std::sqrt(n);
    }
    out.push_back(s);
  }
  return out;
}

nlohmann::json ReportJson(const std::vector<SystemScore>& scores) {
  nlohmann::json systems = nlohmann::json::object();
  for (const SystemScore& s : scores) {
    nlohmann::json row = {{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}};
    if (s.ci_half_width) {
      row["ci_half_width"] = *s.ci_half_width;
      row["ci"] = {*s.ci_low(), *s.ci_high()};
    } else {
      row["ci_half_width"] = nullptr;
      row["ci"] = nullptr;
    }
    systems[s.system] = row;
  }
  return {{"confidence", 0.95}, {"interval", "student_t"}, {"systems", systems}};
}

std::vector<RatingRecord> ReadRatings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(RatingFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

RatingsStore::RatingsStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) records_ = ReadRatings(path_);
}

bool RatingsStore::Append(const RatingRecord& record) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const RatingRecord& r : records_) {
    if (r.listener == record.listener && r.trial == record.trial) return false;
  }
  std::ofstream out(path_, std::ios::app);
  if (!out) throw DataError("cannot append to " + path_.string());
  out << ToJson(record).dump() << '\n';
  out.flush();
  if (!out) throw DataError("write to " + path_.string() + " failed");
  records_.push_back(record);
  return true;
}

std::vector<RatingRecord> RatingsStore::Records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

}  // namespace pitchrave::eval
