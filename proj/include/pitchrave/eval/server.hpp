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

#ifndef PITCHRAVE_EVAL_SERVER_HPP_
#define PITCHRAVE_EVAL_SERVER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "pitchrave/eval/mushra.hpp"

namespace httplib {
class Server;
}

namespace pitchrave::eval {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Listening-test backend. Sessions are created on first request for a
// listener id, seeded from (seed, id), so a reload shows the same order.
//
//   GET  /session/:id    blinded session descriptor
//   GET  /audio/:token   WAV bytes of a stimulus or reference (404 if unknown)
//   POST /ratings        {listener, trial, scores: {token: score}}
//                        400 schema/bounds, 404 unknown session, trial or
//                        token, 409 duplicate (listener, trial)
//   GET  /report         per-system means and 95 % intervals
class MushraService {
 public:
  MushraService(StimuliManifest manifest, std::filesystem::path ratings_path);
  ~MushraService();

  HttpReply GetSession(const std::string& id);
  HttpReply GetAudio(const std::string& token) const;
  HttpReply PostRatings(const std::string& body);
  HttpReply GetReport() const;

  // Registers the routes on `server`.
  void Bind(httplib::Server& server);

  // Blocks serving on host:port.
  void Listen(const std::string& host, int port);
  // Binds an ephemeral port and serves on a background thread; returns the
  // port. Stop() shuts the listener down.
  int StartBackground(const std::string& host = "127.0.0.1");
  void Stop();

  const RatingsStore& store() const { return store_; }

 private:
  const MushraSession& SessionFor(const std::string& id);

  StimulusPool pool_;
  RatingsStore store_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<MushraSession>> sessions_;
  std::map<std::string, const AudioBuffer*> audio_by_token_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace pitchrave::eval

#endif  // PITCHRAVE_EVAL_SERVER_HPP_
