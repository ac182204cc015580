/*
 * Copyright 2026 The urbnav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Live episodes driven by a human operator over HTTP.
//
// A session wraps an Episode with no strategies. Each operator action becomes
// a "continue" stop decision plus a choice decision, both at confidence 1, so
// the resulting logs and metrics match automated runs exactly.
//
// Persistence: a snapshot stores each session's action list. Resuming replays
// the list on a fresh Episode, which reproduces the state bit for bit.

#ifndef URBNAV_SESSION_HPP
#define URBNAV_SESSION_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "urbnav/episode.hpp"
#include "urbnav/metrics.hpp"

namespace urbnav {

enum class SessionStatus { kActive, kStopped, kCapped };

inline std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kActive: return "active";
    case SessionStatus::kStopped: return "stopped";
    case SessionStatus::kCapped: return "capped";
  }
  return "active";
}

/// Error with an HTTP status attached (404 unknown id, 400 bad input, 409 wrong state).
class SessionError : public std::runtime_error {
 public:
  SessionError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

using Clock = std::chrono::system_clock;

struct Session {
  std::string id;
  Task task;
  std::unique_ptr<Episode> episode;
  std::vector<int> actions;  // operator actions in order; -1 is stop
  Clock::time_point created;
  Clock::time_point updated;
  std::mutex mu;

  SessionStatus status() const {
    if (!episode->finished()) return SessionStatus::kActive;
    return episode->trajectory().termination == Termination::kStepCap ? SessionStatus::kCapped
                                                                       : SessionStatus::kStopped;
  }
};

namespace detail {

inline std::string iso_time(Clock::time_point t) {
  const std::time_t tt = Clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::int64_t epoch_s(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

inline Decision human_decision(Phase phase, int action) {
  Decision d;
  d.phase = phase;
  d.action = action;
  d.confidence = 1.0;
  d.rationale = "operator";
  return d;
}

}  // namespace detail

struct SessionOptions {
  int max_steps = 35;
  std::chrono::minutes idle_expiry{60};
  std::filesystem::path snapshot_path;  // empty: no persistence
  std::filesystem::path log_dir;        // finished sessions write their trajectory log here
  std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

class SessionManager {
 public:
  SessionManager(const NavGraph& g, std::vector<Task> tasks, SessionOptions opts = {},
                 const ObservationTable* observations = nullptr)
      : g_(&g), opts_(std::move(opts)), observations_(observations), rng_(std::random_device{}()) {
    for (auto& t : tasks) {
      order_.push_back(t.id);
      tasks_.emplace(t.id, std::move(t));
    }
  }

  /// Listing for operators: id, instruction, and category only.
  json list_tasks() const {
    json out = json::array();
    for (const auto& id : order_) {
      const Task& t = tasks_.at(id);
      out.push_back({{"id", t.id}, {"instruction", t.instruction}, {"category", std::string(to_string(t.category))}});
    }
    return out;
  }

  std::string create(const std::string& task_id) {
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw SessionError(404, "unknown task '" + task_id + "'");
    expire_idle();
    auto s = open(it->second, new_id());
    std::unique_lock lock(map_mu_);
    sessions_[s->id] = s;
    return s->id;
  }

  json state(const std::string& id) {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    return view(*s);
  }

  /// Moves along perspective `action`.
  json act(const std::string& id, int action) {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    if (s->status() != SessionStatus::kActive)
      throw SessionError(409, "session is " + std::string(to_string(s->status())));
    const int n = static_cast<int>(s->episode->current_perspectives().size());
    if (action < 0 || action >= n)
      throw SessionError(400, "action " + std::to_string(action) + " out of range [0, " + std::to_string(n) + ")");
    apply(*s, action);
    s->actions.push_back(action);
    touch(*s);
    return view(*s);
  }

  json stop(const std::string& id) {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    if (s->status() != SessionStatus::kActive)
      throw SessionError(409, "session is " + std::string(to_string(s->status())));
    apply(*s, kActionStop);
    s->actions.push_back(kActionStop);
    touch(*s);
    return view(*s);
  }

  /// Metrics plus the trajectory in log form. Only for finished sessions.
  json report(const std::string& id) {
    auto s = get(id);
    std::lock_guard lock(s->mu);
    if (s->status() == SessionStatus::kActive) throw SessionError(409, "session is still active");
    const Trajectory& t = s->episode->trajectory();
    json log = json::array();
    std::istringstream in(trajectory_to_jsonl(t));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) log.push_back(json::parse(line));
    }
    return {{"session_id", s->id},
            {"status", std::string(to_string(s->status()))},
            {"metrics", metrics_to_json(compute_metrics(*g_, t, s->task))},
            {"trajectory", log}};
  }

  std::size_t size() const {
    std::shared_lock lock(map_mu_);
    return sessions_.size();
  }

  /// Drops sessions idle for longer than the expiry. Returns how many.
  std::size_t expire_idle() {
    const auto now = opts_.now();
    std::unique_lock lock(map_mu_);
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      bool stale;
      {
        std::lock_guard slock(it->second->mu);
        stale = now - it->second->updated > opts_.idle_expiry;
      }
      if (stale) {
        it = sessions_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  json snapshot_json() const {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::shared_lock lock(map_mu_);
      for (const auto& [id, s] : sessions_) all.push_back(s);
    }
    json out = json::array();
    for (const auto& s : all) {
      std::lock_guard lock(s->mu);
      out.push_back({{"id", s->id},
                     {"task_id", s->task.id},
                     {"actions", s->actions},
                     {"created", detail::epoch_s(s->created)},
                     {"updated", detail::epoch_s(s->updated)}});
    }
    return {{"sessions", out}};
  }

  /// Writes the snapshot file (temp file then rename).
  void save_snapshot() const {
    if (opts_.snapshot_path.empty()) return;
    const auto tmp = opts_.snapshot_path.string() + ".tmp";
    write_text_file(tmp, snapshot_json().dump(1) + "\n");
    std::filesystem::rename(tmp, opts_.snapshot_path);
  }

  /// Restores sessions from the snapshot file. Returns how many were restored.
  std::size_t resume() {
    if (opts_.snapshot_path.empty() || !std::filesystem::exists(opts_.snapshot_path)) return 0;
    const json doc = read_json_file(opts_.snapshot_path);
    std::size_t n = 0;
    try {
      for (const auto& j : doc.at("sessions")) {
        auto it = tasks_.find(j.at("task_id").get<std::string>());
        if (it == tasks_.end()) continue;
        auto s = open(it->second, j.at("id").get<std::string>());
        for (int a : j.at("actions").get<std::vector<int>>()) {
          apply(*s, a);
          s->actions.push_back(a);
        }
        s->created = Clock::time_point(std::chrono::seconds(j.at("created").get<std::int64_t>()));
        s->updated = Clock::time_point(std::chrono::seconds(j.at("updated").get<std::int64_t>()));
        std::unique_lock lock(map_mu_);
        sessions_[s->id] = s;
        ++n;
      }
    } catch (const json::exception& e) {
      throw InputError(std::string("session snapshot: ") + e.what());
    }
    expire_idle();
    return n;
  }

 private:
  std::shared_ptr<Session> get(const std::string& id) {
    std::shared_lock lock(map_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(404, "unknown session '" + id + "'");
    return it->second;
  }

  std::shared_ptr<Session> open(const Task& task, std::string id) {
    auto s = std::make_shared<Session>();
    s->id = std::move(id);
    s->task = task;
    EpisodeConfig cfg;
    cfg.max_steps = opts_.max_steps;
    try {
      s->episode = std::make_unique<Episode>(*g_, s->task, cfg, StrategyStack{}, nullptr, observations_);
    } catch (const std::exception& e) {
      throw SessionError(400, std::string("task cannot be started: ") + e.what());
    }
    s->created = s->updated = opts_.now();
    return s;
  }

  void apply(Session& s, int action) {
    Episode& ep = *s.episode;
    if (action == kActionStop) {
      ep.submit_stop(detail::human_decision(Phase::kStop, kActionStop));
    } else {
      ep.submit_stop(detail::human_decision(Phase::kStop, kActionContinue));
      ep.submit_choice(detail::human_decision(Phase::kChoice, action));
    }
    if (ep.finished() && !opts_.log_dir.empty()) {
      write_trajectory_log(ep.trajectory(), opts_.log_dir / ("session-" + s.id + ".jsonl"));
    }
  }

  void touch(Session& s) { s.updated = opts_.now(); }

  json view(const Session& s) const {
    const Episode& ep = *s.episode;
    json v = {{"session_id", s.id},
              {"status", std::string(to_string(s.status()))},
              {"steps", ep.moves()},
              {"max_steps", ep.config().max_steps},
              {"created", detail::iso_time(s.created)},
              {"updated", detail::iso_time(s.updated)}};
    if (s.status() != SessionStatus::kActive) {
      v["summary"] = {{"steps", ep.moves()}, {"terminal", ep.node()}};
      return v;
    }
    v["instruction"] = s.task.instruction;
    v["remaining"] = ep.remaining();
    v["node"] = ep.node();
    v["heading"] = ep.heading();
    json trail = json::array();
    trail.push_back(ep.trajectory().start);
    for (const auto& r : ep.trajectory().steps) {
      if (r.moves()) trail.push_back(r.next);
    }
    v["visited"] = trail;
    json views = json::array();
    for (const auto& p : ep.current_perspectives()) {
      views.push_back({{"action", p.index},
                       {"direction", std::string(to_string(p.direction))},
                       {"heading", p.heading},
                       {"observation", ep.observer().view(ep.node(), p.heading)},
                       {"image", nullptr}});
    }
    v["perspectives"] = views;
    return v;
  }

  std::string new_id() {
    std::lock_guard lock(id_mu_);
    char buf[20];
    std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(rng_()));
    return buf;
  }

  const NavGraph* g_;
  SessionOptions opts_;
  const ObservationTable* observations_;
  std::map<std::string, Task> tasks_;
  std::vector<std::string> order_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mu_;
  std::mt19937_64 rng_;
};

/// Periodic snapshot and expiry on a background thread.
class SnapshotLoop {
 public:
  SnapshotLoop(SessionManager& m, std::chrono::milliseconds every) : m_(&m), every_(every) {
    th_ = std::thread([this] {
      std::unique_lock lock(mu_);
      while (!cv_.wait_for(lock, every_, [this] { return stop_; })) {
        lock.unlock();
        m_->expire_idle();
        m_->save_snapshot();
        lock.lock();
      }
    });
  }
  ~SnapshotLoop() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    th_.join();
    m_->save_snapshot();
  }
  SnapshotLoop(const SnapshotLoop&) = delete;
  SnapshotLoop& operator=(const SnapshotLoop&) = delete;

 private:
  SessionManager* m_;
  std::chrono::milliseconds every_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::thread th_;
};

/// Registers the session routes on `server`. CORS headers go on every reply.
inline void mount_session_routes(httplib::Server& server, SessionManager& m, const std::string& cors_origin = "*") {
  server.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto send = [](httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [send](auto fn) {
    return [fn, send](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const SessionError& e) {
        send(res, {{"error", e.what()}}, e.status());
      } catch (const json::exception& e) {
        send(res, {{"error", std::string("bad request body: ") + e.what()}}, 400);
      } catch (const std::exception& e) {
        send(res, {{"error", e.what()}}, 500);
      }
    };
  };
  auto body_of = [](const httplib::Request& req) {
    json j = req.body.empty() ? json::object() : json::parse(req.body);
    if (!j.is_object()) throw SessionError(400, "request body must be a JSON object");
    return j;
  };

  server.Get("/tasks", guarded([&m, send](const httplib::Request&, httplib::Response& res) {
               send(res, m.list_tasks());
             }));
  server.Post("/sessions", guarded([&m, send, body_of](const httplib::Request& req, httplib::Response& res) {
                const json b = body_of(req);
                if (!b.contains("task_id") || !b["task_id"].is_string()) throw SessionError(400, "task_id is required");
                const std::string id = m.create(b["task_id"].get<std::string>());
                send(res, m.state(id), 201);
              }));
  server.Get(R"(/sessions/([^/]+)/state)", guarded([&m, send](const httplib::Request& req, httplib::Response& res) {
               send(res, m.state(req.matches[1]));
             }));
  server.Post(R"(/sessions/([^/]+)/action)",
              guarded([&m, send, body_of](const httplib::Request& req, httplib::Response& res) {
                const json b = body_of(req);
                if (!b.contains("action")) throw SessionError(400, "action is required");
                const json& a = b["action"];
                if (a.is_string() && a.get<std::string>() == "stop") {
                  send(res, m.stop(req.matches[1]));
                } else if (a.is_number_integer()) {
                  send(res, m.act(req.matches[1], a.get<int>()));
                } else {
                  throw SessionError(400, "action must be an integer index or \"stop\"");
                }
              }));
  server.Post(R"(/sessions/([^/]+)/stop)", guarded([&m, send](const httplib::Request& req, httplib::Response& res) {
                send(res, m.stop(req.matches[1]));
              }));
  server.Get(R"(/sessions/([^/]+)/report)", guarded([&m, send](const httplib::Request& req, httplib::Response& res) {
               send(res, m.report(req.matches[1]));
             }));
}

}  // namespace urbnav

#endif  // URBNAV_SESSION_HPP
