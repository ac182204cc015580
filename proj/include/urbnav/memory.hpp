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

// Per-task memory across rounds, the cognition renderers (C1 connectivity,
// C2 relative position) and the retrieval views (R1 hops, R2 radius, R3 window).

#ifndef URBNAV_MEMORY_HPP
#define URBNAV_MEMORY_HPP

#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "urbnav/graph_io.hpp"
#include "urbnav/perspective.hpp"
#include "urbnav/trajectory.hpp"

namespace urbnav {

struct NodeDecisionRecord {
  int round = 0;
  std::string thoughts;
  std::optional<int> previous_action;
  int next_action = 0;
  std::string direction;
  double confidence = 0.0;
};

struct EdgeOutcome {
  int round = 0;
  bool success = false;
  std::string direction;
};

/// One position in a round's path: the node and the heading held on arrival.
struct TracePoint {
  NodeId node;
  double heading = 0.0;
  std::optional<int> action;  // action that left this node, if any
  bool backtrack = false;     // whether the hop leaving this node was a retrace
};

struct RoundTrace {
  int round = 0;
  std::vector<TracePoint> points;
  bool success = false;
};

struct HistoryEntry {
  int step = 0;
  NodeId node;
  LatLon pos;
  double heading = 0.0;
  std::string direction;
  double confidence = 0.0;
  std::string rationale;
};

class MemoryStore {
 public:
  explicit MemoryStore(std::string task_id = {}, int total_rounds = 1)
      : task_id_(std::move(task_id)), total_rounds_(total_rounds) {}

  const std::string& task_id() const { return task_id_; }
  int total_rounds() const { return total_rounds_; }
  int current_round() const { return current_round_; }

  void begin_round(int round, const NodeId& start, double heading) {
    current_round_ = round;
    r3_.clear();
    pending_edges_.clear();
    traces_.push_back(RoundTrace{round, {TracePoint{start, heading, std::nullopt, false}}, false});
    count_visit(start);
  }

  /// Records a hop out of the current trace end. `action` is the perspective index used.
  void record_move(const NodeId& from, const NodeId& to, int action, Direction dir, double arrival_heading,
                   bool backtrack) {
    auto& trace = traces_.back();
    trace.points.back().action = action;
    trace.points.back().backtrack = backtrack;
    trace.points.push_back(TracePoint{to, arrival_heading, std::nullopt, false});
    pending_edges_.push_back({{from, to}, std::string(to_string(dir))});
    count_visit(to);
  }

  void record_decision(const NodeId& node, NodeDecisionRecord rec) {
    rec.round = current_round_;
    nodes_[node].records.push_back(std::move(rec));
  }

  void push_history(HistoryEntry e, int window) {
    r3_.push_back(std::move(e));
    while (static_cast<int>(r3_.size()) > window) r3_.pop_front();
  }

  /// Closes the round: edge outcomes become final and the R3 buffer is purged.
  void end_round(bool success) {
    for (const auto& [edge, dir] : pending_edges_) edges_[edge].push_back({current_round_, success, dir});
    pending_edges_.clear();
    if (!traces_.empty()) traces_.back().success = success;
    r3_.clear();
  }

  /// Visits to `node` in rounds strictly before `before_round`.
  int visits(const NodeId& node, int before_round) const {
    auto it = nodes_.find(node);
    if (it == nodes_.end()) return 0;
    int n = 0;
    for (const auto& [round, count] : it->second.visits_by_round) {
      if (round < before_round) n += count;
    }
    return n;
  }

  /// Total visits per node over rounds before `before_round`.
  std::map<NodeId, int> visit_counts(int before_round) const {
    std::map<NodeId, int> out;
    for (const auto& [id, mem] : nodes_) {
      const int n = visits(id, before_round);
      if (n > 0) out[id] = n;
    }
    return out;
  }

  std::vector<NodeDecisionRecord> records(const NodeId& node, int before_round) const {
    std::vector<NodeDecisionRecord> out;
    auto it = nodes_.find(node);
    if (it == nodes_.end()) return out;
    for (const auto& r : it->second.records) {
      if (r.round < before_round) out.push_back(r);
    }
    return out;
  }

  std::vector<EdgeOutcome> edge_outcomes(const NodeId& from, const NodeId& to, int before_round) const {
    std::vector<EdgeOutcome> out;
    auto it = edges_.find({from, to});
    if (it == edges_.end()) return out;
    for (const auto& o : it->second) {
      if (o.round < before_round) out.push_back(o);
    }
    return out;
  }

  const std::vector<RoundTrace>& traces() const { return traces_; }
  const std::deque<HistoryEntry>& history() const { return r3_; }

  json to_json() const {
    json nodes = json::object();
    for (const auto& [id, mem] : nodes_) {
      json visits = json::object();
      for (const auto& [round, count] : mem.visits_by_round) visits[std::to_string(round)] = count;
      json recs = json::array();
      for (const auto& r : mem.records) {
        recs.push_back({{"round", r.round},
                        {"thoughts", r.thoughts},
                        {"previous_action", r.previous_action ? json(*r.previous_action) : json(nullptr)},
                        {"next_action", r.next_action},
                        {"direction", r.direction},
                        {"confidence", r.confidence}});
      }
      nodes[id] = {{"visits", visits}, {"records", recs}};
    }
    json edges = json::array();
    for (const auto& [edge, outs] : edges_) {
      json o = json::array();
      for (const auto& e : outs) o.push_back({{"round", e.round}, {"success", e.success}, {"direction", e.direction}});
      edges.push_back({{"from", edge.first}, {"to", edge.second}, {"outcomes", o}});
    }
    json rounds = json::array();
    for (const auto& t : traces_) {
      json pts = json::array();
      for (const auto& p : t.points) {
        pts.push_back({{"node", p.node},
                       {"heading", p.heading},
                       {"action", p.action ? json(*p.action) : json(nullptr)},
                       {"backtrack", p.backtrack}});
      }
      rounds.push_back({{"round", t.round}, {"success", t.success}, {"points", pts}});
    }
    json r3 = json::array();
    for (const auto& h : r3_) {
      r3.push_back({{"step", h.step},
                    {"node", h.node},
                    {"lat", h.pos.lat},
                    {"lon", h.pos.lon},
                    {"heading", h.heading},
                    {"direction", h.direction},
                    {"confidence", h.confidence},
                    {"rationale", h.rationale}});
    }
    return {{"task_id", task_id_}, {"total_rounds", total_rounds_}, {"current_round", current_round_},
            {"nodes", nodes},      {"edges", edges},                {"rounds", rounds},
            {"r3", r3}};
  }

  static MemoryStore from_json(const json& j) {
    MemoryStore s(j.at("task_id").get<std::string>(), j.at("total_rounds").get<int>());
    s.current_round_ = j.at("current_round").get<int>();
    for (const auto& [id, mem] : j.at("nodes").items()) {
      auto& m = s.nodes_[id];
      for (const auto& [round, count] : mem.at("visits").items()) m.visits_by_round[std::stoi(round)] = count.get<int>();
      for (const auto& r : mem.at("records")) {
        NodeDecisionRecord rec;
        rec.round = r.at("round").get<int>();
        rec.thoughts = r.at("thoughts").get<std::string>();
        if (!r.at("previous_action").is_null()) rec.previous_action = r.at("previous_action").get<int>();
        rec.next_action = r.at("next_action").get<int>();
        rec.direction = r.at("direction").get<std::string>();
        rec.confidence = r.at("confidence").get<double>();
        m.records.push_back(std::move(rec));
      }
    }
    for (const auto& e : j.at("edges")) {
      auto& outs = s.edges_[{e.at("from").get<std::string>(), e.at("to").get<std::string>()}];
      for (const auto& o : e.at("outcomes"))
        outs.push_back({o.at("round").get<int>(), o.at("success").get<bool>(), o.at("direction").get<std::string>()});
    }
    for (const auto& r : j.at("rounds")) {
      RoundTrace t;
      t.round = r.at("round").get<int>();
      t.success = r.at("success").get<bool>();
      for (const auto& p : r.at("points")) {
        TracePoint tp;
        tp.node = p.at("node").get<std::string>();
        tp.heading = p.at("heading").get<double>();
        if (!p.at("action").is_null()) tp.action = p.at("action").get<int>();
        tp.backtrack = p.at("backtrack").get<bool>();
        t.points.push_back(std::move(tp));
      }
      s.traces_.push_back(std::move(t));
    }
    for (const auto& h : j.at("r3")) {
      s.r3_.push_back({h.at("step").get<int>(), h.at("node").get<std::string>(),
                       LatLon{h.at("lat").get<double>(), h.at("lon").get<double>()}, h.at("heading").get<double>(),
                       h.at("direction").get<std::string>(), h.at("confidence").get<double>(),
                       h.at("rationale").get<std::string>()});
    }
    return s;
  }

 private:
  struct NodeMemory {
    std::map<int, int> visits_by_round;
    std::vector<NodeDecisionRecord> records;
  };

  void count_visit(const NodeId& node) { ++nodes_[node].visits_by_round[current_round_]; }

  std::string task_id_;
  int total_rounds_;
  int current_round_ = 0;
  std::map<NodeId, NodeMemory> nodes_;
  std::map<std::pair<NodeId, NodeId>, std::vector<EdgeOutcome>> edges_;
  std::vector<std::pair<std::pair<NodeId, NodeId>, std::string>> pending_edges_;
  std::vector<RoundTrace> traces_;
  std::deque<HistoryEntry> r3_;
};

// ---------------------------------------------------------------------------
// Cognition renderers. Both read only rounds before the current one.

/// Connectivity lines per visited node, nodes in first-visit order and lines in
/// round order; repeated identical lines are listed once.
inline std::string render_c1(const MemoryStore& store) {
  std::vector<NodeId> order;
  std::map<NodeId, std::vector<std::string>> lines;
  for (const auto& trace : store.traces()) {
    if (trace.round >= store.current_round()) continue;
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
      const auto& p = trace.points[i];
      if (!lines.contains(p.node)) {
        lines[p.node];
        order.push_back(p.node);
      }
      if (i + 1 < trace.points.size() && p.action) {
        const std::string line = "- `" + p.node + "` → **action " + std::to_string(*p.action) + "** → `" +
                                 trace.points[i + 1].node + "`";
        auto& v = lines[p.node];
        if (std::find(v.begin(), v.end(), line) == v.end()) v.push_back(line);
      }
    }
  }
  std::string out;
  for (const auto& id : order) {
    const auto& v = lines[id];
    if (v.empty()) continue;
    out += "### Node: " + id + "\n**Relationships:**\n";
    for (const auto& l : v) out += l + "\n";
  }
  return out;
}

/// Direction word for a bearing difference in degrees.
inline std::string c2_direction_bucket(double delta) {
  const double a = std::abs(delta);
  if (a <= 22.5) return "Front";
  if (a > 157.5) return "Back";
  if (a <= 67.5) return delta > 0 ? "Slightly right" : "Slightly left";
  return delta > 0 ? "Right" : "Left";
}

/// 10 m band, e.g. 25 m gives "20-30 meters".
inline std::string c2_distance_band(double meters) {
  const long lo = static_cast<long>(std::floor(meters / 10.0)) * 10;
  return std::to_string(lo) + "-" + std::to_string(lo + 10) + " meters";
}

/// One relative-position entry between two key nodes.
inline std::string render_c2_segment(const NavGraph& g, const NodeId& a, double heading_at_a, const NodeId& b) {
  const LatLon pa = g.node(a).pos;
  const LatLon pb = g.node(b).pos;
  const double delta = signed_angle_diff(heading_at_a, initial_bearing(pa, pb));
  return "### " + a + " → " + b + "\n- **Direction**: " + c2_direction_bucket(delta) +
         "\n- **Relative Position**: Distance: " + c2_distance_band(geodesic_distance(pa, pb)) + "\n";
}

/// Relative positions between consecutive key nodes (start, turns over 22.5
/// degrees, terminal) of each prior round.
inline std::string render_c2(const MemoryStore& store, const NavGraph& g) {
  std::string out;
  for (const auto& trace : store.traces()) {
    if (trace.round >= store.current_round() || trace.points.size() < 2) continue;
    std::vector<std::size_t> keys{0};
    for (std::size_t i = 1; i + 1 < trace.points.size(); ++i) {
      if (std::abs(signed_angle_diff(trace.points[i].heading, trace.points[i + 1].heading)) > 22.5) keys.push_back(i);
    }
    keys.push_back(trace.points.size() - 1);
    std::string body;
    for (std::size_t k = 1; k < keys.size(); ++k) {
      const auto& a = trace.points[keys[k - 1]];
      const auto& b = trace.points[keys[k]];
      if (a.node == b.node) continue;
      body += render_c2_segment(g, a.node, a.heading, b.node);
    }
    if (!body.empty()) out += "## Round " + std::to_string(trace.round) + "\n" + body;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Retrieval.

struct RetrievedNode {
  NodeId id;
  int visits = 0;
  std::vector<NodeDecisionRecord> records;
};

struct RetrievedEdge {
  NodeId from;
  NodeId to;
  std::vector<EdgeOutcome> outcomes;
};

struct Retrieval {
  std::vector<RetrievedNode> nodes;  // in graph order
  std::vector<RetrievedEdge> edges;

  std::set<NodeId> node_ids() const {
    std::set<NodeId> s;
    for (const auto& n : nodes) s.insert(n.id);
    return s;
  }
};

namespace detail {

inline Retrieval assemble(const MemoryStore& store, const NavGraph& g, std::vector<NodeIndex> members) {
  std::sort(members.begin(), members.end());
  Retrieval r;
  const int before = store.current_round();
  std::set<NodeIndex> in(members.begin(), members.end());
  for (NodeIndex i : members) {
    const NodeId& id = g.node(i).id;
    r.nodes.push_back({id, store.visits(id, before), store.records(id, before)});
  }
  for (NodeIndex i : members) {
    for (const auto& e : g.out_edges(i)) {
      if (!in.contains(g.require(e.to))) continue;
      auto outcomes = store.edge_outcomes(e.from, e.to, before);
      if (!outcomes.empty()) r.edges.push_back({e.from, e.to, std::move(outcomes)});
    }
  }
  return r;
}

}  // namespace detail

/// Visited nodes within `hops` of v (plus v itself) with their stored metadata.
inline Retrieval r1_retrieve(const MemoryStore& store, const NavGraph& g, const NodeId& v, int hops = 1) {
  const NodeIndex vi = g.require(v);
  const int before = store.current_round();
  std::vector<int> dist(g.node_count(), -1);
  std::deque<NodeIndex> queue{vi};
  dist[vi] = 0;
  std::vector<NodeIndex> members;
  while (!queue.empty()) {
    const NodeIndex u = queue.front();
    queue.pop_front();
    if (u == vi || store.visits(g.node(u).id, before) > 0) members.push_back(u);
    if (dist[u] == hops) continue;
    for (NodeIndex w : g.out_targets(u)) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return detail::assemble(store, g, std::move(members));
}

/// Visited nodes within `radius_m` of v's position (plus v itself).
inline Retrieval r2_retrieve(const MemoryStore& store, const NavGraph& g, const NodeId& v, double radius_m = 50.0) {
  const NodeIndex vi = g.require(v);
  const int before = store.current_round();
  std::vector<NodeIndex> members;
  for (NodeIndex u : g.nodes_within_radius_idx(g.node(vi).pos, radius_m)) {
    if (u == vi || store.visits(g.node(u).id, before) > 0) members.push_back(u);
  }
  if (std::find(members.begin(), members.end(), vi) == members.end()) members.push_back(vi);
  return detail::assemble(store, g, std::move(members));
}

namespace detail {

inline std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace detail

inline std::string render_retrieval(const Retrieval& r) {
  std::string out;
  for (const auto& n : r.nodes) {
    out += "### Node " + n.id + " (visits: " + std::to_string(n.visits) + ")\n";
    for (const auto& rec : n.records) {
      out += "- round " + std::to_string(rec.round) + ": previous action " +
             (rec.previous_action ? std::to_string(*rec.previous_action) : std::string("none")) + ", next action " +
             std::to_string(rec.next_action) + " (" + rec.direction + "), confidence " +
             detail::fmt(rec.confidence, 2);
      if (!rec.thoughts.empty()) out += ", thoughts: " + rec.thoughts;
      out += "\n";
    }
  }
  if (!r.edges.empty()) {
    out += "### Edges\n";
    for (const auto& e : r.edges) {
      out += "- " + e.from + " → " + e.to + ":";
      for (std::size_t i = 0; i < e.outcomes.size(); ++i) {
        const auto& o = e.outcomes[i];
        out += (i ? ";" : "") + std::string(" round ") + std::to_string(o.round) + " " +
               (o.success ? "success" : "failure") + " (" + o.direction + ")";
      }
      out += "\n";
    }
  }
  return out;
}

inline std::string render_history_entry(const HistoryEntry& h) {
  std::string s = "- step " + std::to_string(h.step) + " at " + h.node + " (" + detail::fmt(h.pos.lat, 6) + ", " +
                  detail::fmt(h.pos.lon, 6) + "), heading " + detail::fmt(h.heading, 0) + ", moved " + h.direction +
                  ", confidence " + detail::fmt(h.confidence, 2);
  if (!h.rationale.empty()) s += ": " + h.rationale;
  return s + "\n";
}

inline std::string render_history(const std::deque<HistoryEntry>& entries) {
  std::string out;
  for (const auto& h : entries) out += render_history_entry(h);
  return out;
}

inline HistoryEntry history_entry_of(const NavGraph& g, const StepRecord& s) {
  HistoryEntry h;
  h.step = s.index;
  h.node = s.node;
  h.pos = g.node(s.node).pos;
  h.heading = s.heading;
  h.direction = s.direction ? std::string(to_string(*s.direction)) : std::string("STOP");
  h.confidence = s.confidence();
  h.rationale = s.choice ? s.choice->rationale : (s.stop ? s.stop->rationale : std::string{});
  return h;
}

/// The last n step records (fewer at the start of an episode), rendered.
inline std::string r3_window(const NavGraph& g, const std::vector<StepRecord>& steps, int n = 3) {
  std::deque<HistoryEntry> window;
  const std::size_t first = steps.size() > static_cast<std::size_t>(n) ? steps.size() - n : 0;
  for (std::size_t i = first; i < steps.size(); ++i) window.push_back(history_entry_of(g, steps[i]));
  return render_history(window);
}

}  // namespace urbnav

#endif  // URBNAV_MEMORY_HPP
