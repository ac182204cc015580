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

// Episode records and their JSON-lines log:
//   line 1      {"type":"header", ...}
//   lines 2..   {"type":"step", ...}   one per StepRecord
//   last line   {"type":"footer", ...}

#ifndef URBNAV_TRAJECTORY_HPP
#define URBNAV_TRAJECTORY_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "urbnav/decision.hpp"
#include "urbnav/graph_io.hpp"
#include "urbnav/perspective.hpp"

namespace urbnav {

struct EpisodeConfig {
  int max_steps = 35;
  std::vector<double> tcp_thresholds{40.0, 50.0, 60.0};
  int round = 1;
  int total_rounds = 1;
  std::uint64_t seed = 0;
  int retries = 2;
  int retry_backoff_ms = 250;
};

enum class StepKind { kMove, kStop, kBacktrack };
enum class Termination { kStopped, kStepCap, kError };

inline std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::kMove: return "move";
    case StepKind::kStop: return "stop";
    case StepKind::kBacktrack: return "backtrack";
  }
  return "move";
}

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kStopped: return "stopped";
    case Termination::kStepCap: return "step_cap";
    case Termination::kError: return "error";
  }
  return "error";
}

struct StepRecord {
  int index = 0;
  StepKind kind = StepKind::kMove;
  NodeId node;                  // where the step starts
  double heading = 0.0;         // facing direction at `node`
  std::optional<Decision> stop;
  std::optional<Decision> choice;
  std::optional<Direction> direction;
  NodeId next;                  // arrival node; empty for a stop record
  double edge_azimuth = 0.0;
  double edge_length_m = 0.0;
  int distance_to_goal = 0;     // hops from `node` to the goal, -1 if unreachable
  double wall_ms = 0.0;

  bool moves() const { return kind != StepKind::kStop; }

  /// Confidence attached to the step (choice decision, else stop decision).
  double confidence() const {
    if (choice) return choice->confidence;
    if (stop) return stop->confidence;
    return 0.0;
  }
};

struct Trajectory {
  std::string task_id;
  std::string city;
  int round = 1;
  NodeId start;
  double initial_heading = 0.0;
  std::vector<StepRecord> steps;
  NodeId terminal;
  Termination termination = Termination::kStepCap;
  std::string error;
  EpisodeConfig config;
  std::string strategies;

  int moves() const {
    int n = 0;
    for (const auto& s : steps) n += s.moves() ? 1 : 0;
    return n;
  }

  /// Start followed by every arrival, backtrack hops included.
  std::vector<NodeId> node_sequence() const {
    std::vector<NodeId> seq{start};
    for (const auto& s : steps) {
      if (s.moves()) seq.push_back(s.next);
    }
    return seq;
  }
};

// ---------------------------------------------------------------------------
// JSON-lines log.

namespace detail {

inline std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

inline json decision_to_json(const Decision& d) {
  return {{"phase", std::string(to_string(d.phase))}, {"observation", d.observation_digest},
          {"rationale", d.rationale},                 {"action", d.action},
          {"confidence", d.confidence},               {"fallback", d.fallback_used}};
}

inline Decision decision_from_json(const json& j) {
  Decision d;
  d.phase = j.at("phase").get<std::string>() == "stop" ? Phase::kStop : Phase::kChoice;
  d.observation_digest = j.value("observation", std::string{});
  d.rationale = j.value("rationale", std::string{});
  d.action = j.at("action").get<int>();
  d.confidence = j.at("confidence").get<double>();
  d.fallback_used = j.value("fallback", false);
  return d;
}

inline StepKind step_kind_from_string(const std::string& s) {
  if (s == "move") return StepKind::kMove;
  if (s == "stop") return StepKind::kStop;
  if (s == "backtrack") return StepKind::kBacktrack;
  throw InputError("unknown step kind '" + s + "'");
}

inline Termination termination_from_string(const std::string& s) {
  if (s == "stopped") return Termination::kStopped;
  if (s == "step_cap") return Termination::kStepCap;
  if (s == "error") return Termination::kError;
  throw InputError("unknown termination '" + s + "'");
}

inline Direction direction_from_string(const std::string& s) {
  for (auto d : {Direction::kForward, Direction::kRight, Direction::kBack, Direction::kLeft}) {
    if (to_string(d) == s) return d;
  }
  throw InputError("unknown direction '" + s + "'");
}

}  // namespace detail

inline json step_to_json(const StepRecord& s) {
  json j = {{"type", "step"},
            {"index", s.index},
            {"kind", std::string(to_string(s.kind))},
            {"node", s.node},
            {"heading", s.heading},
            {"stop", s.stop ? detail::decision_to_json(*s.stop) : json(nullptr)},
            {"choice", s.choice ? detail::decision_to_json(*s.choice) : json(nullptr)},
            {"direction", s.direction ? json(std::string(to_string(*s.direction))) : json(nullptr)},
            {"next", s.next},
            {"d", s.distance_to_goal},
            {"wall_ms", s.wall_ms}};
  if (s.moves()) j["edge"] = {{"azimuth", s.edge_azimuth}, {"length_m", s.edge_length_m}};
  return j;
}

inline std::string trajectory_to_jsonl(const Trajectory& t) {
  std::ostringstream out;
  json header = {{"type", "header"},
                 {"task_id", t.task_id},
                 {"city", t.city},
                 {"round", t.round},
                 {"start", t.start},
                 {"initial_heading", t.initial_heading},
                 {"strategies", t.strategies},
                 {"config",
                  {{"max_steps", t.config.max_steps},
                   {"tcp_thresholds", t.config.tcp_thresholds},
                   {"round", t.config.round},
                   {"total_rounds", t.config.total_rounds},
                   {"seed", t.config.seed},
                   {"retries", t.config.retries}}}};
  out << detail::dump_line(header) << '\n';
  for (const auto& s : t.steps) out << detail::dump_line(step_to_json(s)) << '\n';
  json footer = {{"type", "footer"},
                 {"terminal", t.terminal},
                 {"termination", std::string(to_string(t.termination))},
                 {"moves", t.moves()},
                 {"error", t.error}};
  out << detail::dump_line(footer) << '\n';
  return out.str();
}

inline void write_trajectory_log(const Trajectory& t, const std::filesystem::path& path) {
  write_text_file(path, trajectory_to_jsonl(t));
}

/// Parses a trajectory log. Throws InputError naming the offending line.
inline Trajectory trajectory_from_jsonl(const std::string& text) {
  Trajectory t;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  bool have_footer = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (have_footer) throw InputError(where + ": content after footer");
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InputError(where + ": not a JSON object (truncated or corrupt)");
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) throw InputError(where + ": duplicate header");
        have_header = true;
        t.task_id = j.at("task_id").get<std::string>();
        t.city = j.value("city", std::string{});
        t.round = j.value("round", 1);
        t.start = j.at("start").get<std::string>();
        t.initial_heading = j.value("initial_heading", 0.0);
        t.strategies = j.value("strategies", std::string{});
        const auto& c = j.at("config");
        t.config.max_steps = c.at("max_steps").get<int>();
        t.config.tcp_thresholds = c.at("tcp_thresholds").get<std::vector<double>>();
        t.config.round = c.value("round", 1);
        t.config.total_rounds = c.value("total_rounds", 1);
        t.config.seed = c.value("seed", std::uint64_t{0});
        t.config.retries = c.value("retries", 2);
      } else if (type == "step") {
        if (!have_header) throw InputError(where + ": step before header");
        StepRecord s;
        s.index = j.at("index").get<int>();
        s.kind = detail::step_kind_from_string(j.at("kind").get<std::string>());
        s.node = j.at("node").get<std::string>();
        s.heading = j.at("heading").get<double>();
        if (!j.at("stop").is_null()) s.stop = detail::decision_from_json(j.at("stop"));
        if (!j.at("choice").is_null()) s.choice = detail::decision_from_json(j.at("choice"));
        if (!j.at("direction").is_null()) s.direction = detail::direction_from_string(j.at("direction").get<std::string>());
        s.next = j.value("next", std::string{});
        s.distance_to_goal = j.value("d", 0);
        s.wall_ms = j.value("wall_ms", 0.0);
        if (s.moves()) {
          s.edge_azimuth = j.at("edge").at("azimuth").get<double>();
          s.edge_length_m = j.at("edge").at("length_m").get<double>();
        }
        t.steps.push_back(std::move(s));
      } else if (type == "footer") {
        if (!have_header) throw InputError(where + ": footer before header");
        have_footer = true;
        t.terminal = j.at("terminal").get<std::string>();
        t.termination = detail::termination_from_string(j.at("termination").get<std::string>());
        t.error = j.value("error", std::string{});
      } else {
        throw InputError(where + ": unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  if (!have_header) throw InputError("line 1: missing header");
  if (!have_footer) throw InputError("line " + std::to_string(line_no) + ": truncated log, footer missing");
  return t;
}

inline Trajectory read_trajectory_log(const std::filesystem::path& path) {
  return trajectory_from_jsonl(read_text_file(path));
}

/// Checks that consecutive records chain and that every unflagged transition
/// follows a graph edge; flagged backtracks may only land on visited nodes.
/// Throws InputError describing the first violation.
inline void check_trajectory_structure(const NavGraph& g, const Trajectory& t) {
  if (!g.has_node(t.start)) throw InputError("start node '" + t.start + "' not in graph");
  NodeId at = t.start;
  std::set<NodeId> visited{t.start};
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    const std::string where = "step " + std::to_string(s.index);
    if (s.node != at) throw InputError(where + ": starts at '" + s.node + "' but agent is at '" + at + "'");
    if (s.kind == StepKind::kStop) {
      if (i + 1 != t.steps.size()) throw InputError(where + ": stop is not the final record");
      continue;
    }
    if (!g.has_node(s.next)) throw InputError(where + ": unknown node '" + s.next + "'");
    const bool adjacent = g.find_edge(s.node, s.next) != nullptr;
    if (!adjacent) {
      if (s.kind != StepKind::kBacktrack)
        throw InputError(where + ": non-adjacent transition " + s.node + "->" + s.next + " not flagged as backtrack");
      if (!visited.contains(s.next))
        throw InputError(where + ": backtrack to unvisited node '" + s.next + "'");
    }
    at = s.next;
    visited.insert(at);
  }
  if (t.terminal != at) throw InputError("terminal node '" + t.terminal + "' does not match last position '" + at + "'");
  if (t.moves() > t.config.max_steps) throw InputError("trajectory exceeds max_steps");
}

}  // namespace urbnav

#endif  // URBNAV_TRAJECTORY_HPP
