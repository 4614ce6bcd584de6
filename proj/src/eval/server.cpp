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

#include "pitchrave/eval/server.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include "httplib.h"
#include "pitchrave/common.hpp"

namespace pitchrave::eval {
namespace {

HttpReply JsonReply(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }

HttpReply ErrorReply(int status, const std::string& message) {
  return JsonReply(status, {{"error", message}});
}

std::string UtcNow() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_content(reply.body, reply.content_type);
}

}  // namespace

MushraService::MushraService(StimuliManifest manifest, std::filesystem::path ratings_path)
    : pool_(std::move(manifest)), store_(std::move(ratings_path)) {}

MushraService::~MushraService() { Stop(); }

const MushraSession& MushraService::SessionFor(const std::string& id) {
  auto it = sessions_.find(id);
  if (it != sessions_.end()) return *it->second;
  auto session = std::make_unique<MushraSession>(BuildSession(pool_, id, pool_.manifest.seed));
  for (const SessionTrial& t : session->trials) {
    audio_by_token_[t.reference_token] = t.reference;
    for (const Stimulus& st : t.stimuli) audio_by_token_[st.token] = st.audio;
  }
  return *sessions_.emplace(id, std::move(session)).first->second;
}

HttpReply MushraService::GetSession(const std::string& id) {
  if (id.empty()) return ErrorReply(400, "empty session id");
  std::lock_guard<std::mutex> lock(mu_);
  return JsonReply(200, SessionFor(id).Blinded());
}

HttpReply MushraService::GetAudio(const std::string& token) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = audio_by_token_.find(token);
  if (it == audio_by_token_.end()) return ErrorReply(404, "unknown stimulus");
  const auto bytes = EncodeWav(*it->second);
  return {200, "audio/wav", std::string(bytes.begin(), bytes.end())};
}

HttpReply MushraService::PostRatings(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return ErrorReply(400, "body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("listener") || !j["listener"].is_string() ||
      !j.contains("trial") || !j["trial"].is_string() || !j.contains("scores") ||
      !j["scores"].is_object()) {
    return ErrorReply(400, "expected {listener: string, trial: string, scores: object}");
  }
  for (const auto& [token, score] : j["scores"].items()) {
    if (!score.is_number()) return ErrorReply(400, "score for " + token + " is not a number");
    const double v = score.get<double>();
    if (!(v >= 0.0 && v <= 100.0)) return ErrorReply(400, "score for " + token + " outside [0, 100]");
  }

  RatingRecord record;
  record.listener = j["listener"].get<std::string>();
  record.trial = j["trial"].get<std::string>();
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = sessions_.find(record.listener);
    if (it == sessions_.end()) return ErrorReply(404, "unknown session");
    const SessionTrial* trial = nullptr;
    for (const SessionTrial& t : it->second->trials) {
      if (t.id == record.trial) trial = &t;
    }
    if (trial == nullptr) return ErrorReply(404, "unknown trial");
    std::set<std::string> expected;
    for (const Stimulus& st : trial->stimuli) expected.insert(st.token);
    for (const auto& [token, score] : j["scores"].items()) {
      if (!expected.contains(token)) return ErrorReply(404, "unknown stimulus " + token);
    }
    if (j["scores"].size() != expected.size()) {
      return ErrorReply(400, "every stimulus of the trial must be rated");
    }
    for (const Stimulus& st : trial->stimuli) {
      record.scores[st.system] = j["scores"][st.token].get<double>();
    }
  }
  record.timestamp = UtcNow();
  if (!store_.Append(record)) return ErrorReply(409, "ratings for this trial already submitted");
  return JsonReply(200, {{"status", "ok"}});
}

HttpReply MushraService::GetReport() const {
  const auto records = store_.Records();
  if (records.empty()) return JsonReply(200, ReportJson({}));
  return JsonReply(200, ReportJson(AggregateScores(records)));
}

void MushraService::Bind(httplib::Server& server) {
  server.Get(R"(/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    Send(res, GetSession(req.matches[1]));
  });
  server.Get(R"(/audio/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    Send(res, GetAudio(req.matches[1]));
  });
  server.Post("/ratings", [this](const httplib::Request& req, httplib::Response& res) {
    Send(res, PostRatings(req.body));
  });
  server.Get("/report", [this](const httplib::Request&, httplib::Response& res) {
    Send(res, GetReport());
  });
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

void MushraService::Listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  Bind(*server_);
  if (!server_->listen(host, port)) {
    throw UsageError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

int MushraService::StartBackground(const std::string& host) {
  Stop();
  server_ = std::make_unique<httplib::Server>();
  Bind(*server_);
  const int port = server_->bind_to_any_port(host);
  if (port <= 0) throw UsageError("cannot bind a port on " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void MushraService::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace pitchrave::eval
