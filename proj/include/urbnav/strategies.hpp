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

// Backtracking triggers and targets (B1/B2/B3) and the strategy stack.

#ifndef URBNAV_STRATEGIES_HPP
#define URBNAV_STRATEGIES_HPP

#include <climits>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "urbnav/graph_io.hpp"
#include "urbnav/perspective.hpp"
#include "urbnav/routing.hpp"

namespace urbnav {

inline constexpr int kDefaultWindowK = 3;
inline constexpr double kDefaultTheta = 0.75;

/// Last k step confidences, oldest first.
class ConfidenceWindow {
 public:
  explicit ConfidenceWindow(int k = kDefaultWindowK, double theta = kDefaultTheta) : k_(k), theta_(theta) {
    if (k < 1) throw std::invalid_argument("window k must be >= 1");
  }
  void push(double c) {
    values_.push_back(c);
    while (static_cast<int>(values_.size()) > k_) values_.pop_front();
  }
  void clear() { values_.clear(); }
  bool full() const { return static_cast<int>(values_.size()) == k_; }
  int k() const { return k_; }
  double theta() const { return theta_; }
  const std::deque<double>& values() const { return values_; }

 private:
  int k_;
  double theta_;
  std::deque<double> values_;
};

/// Last k+1 hop distances to the goal, oldest first.
class DistanceWindow {
 public:
  explicit DistanceWindow(int k = kDefaultWindowK) : k_(k) {
    if (k < 1) throw std::invalid_argument("window k must be >= 1");
  }
  void push(int d) {
    values_.push_back(d);
    while (static_cast<int>(values_.size()) > k_ + 1) values_.pop_front();
  }
  void clear() { values_.clear(); }
  bool full() const { return static_cast<int>(values_.size()) == k_ + 1; }
  int k() const { return k_; }
  const std::deque<int>& values() const { return values_; }

 private:
  int k_;
  std::deque<int> values_;
};

/// Mean of the window strictly below theta. False until the window is full.
inline bool b1_should_backtrack(const ConfidenceWindow& w) {
  if (!w.full()) return false;
  const double sum = std::accumulate(w.values().begin(), w.values().end(), 0.0);
  return sum / static_cast<double>(w.k()) < w.theta();
}

/// Every consecutive pair strictly increasing. Unreachable (-1) counts as
/// larger than any finite distance. False until k+1 values are present.
inline bool b2_should_backtrack(const DistanceWindow& w) {
  if (!w.full()) return false;
  auto key = [](int d) { return d < 0 ? INT_MAX : d; };
  for (std::size_t i = 1; i < w.values().size(); ++i) {
    if (!(key(w.values()[i]) > key(w.values()[i - 1]))) return false;
  }
  return true;
}

enum class BacktrackMode { kB1, kB2, kB3 };

/// One forward arrival on the agent's current trail. Entry 0 is the start.
struct TrailEntry {
  NodeId node;
  double confidence = 1.0;
};

/// Index into `trail` of the revert target; the last entry is the current node.
/// B1/B3: the most recent entry among the k before the current one whose
/// confidence reaches theta, else the entry k back. B2: the entry k back.
/// Never before the start.
inline std::size_t backtrack_target(const std::vector<TrailEntry>& trail, BacktrackMode mode, int k = kDefaultWindowK,
                                    double theta = kDefaultTheta) {
  if (trail.empty()) throw std::invalid_argument("empty trail");
  const std::size_t m = trail.size() - 1;
  const std::size_t lowest = m >= static_cast<std::size_t>(k) ? m - static_cast<std::size_t>(k) : 0;
  if (mode != BacktrackMode::kB2) {
    for (std::size_t j = m; j-- > lowest;) {
      if (j == 0 || trail[j].confidence >= theta) return j;
    }
  }
  return lowest;
}

/// Rebuilds the trail from step records: forward moves push, backtrack hops pop.
template <typename Steps>
std::vector<TrailEntry> trail_from_steps(const NodeId& start, const Steps& steps) {
  std::vector<TrailEntry> trail{{start, 1.0}};
  for (const auto& s : steps) {
    if (!s.moves()) continue;
    if (s.kind == decltype(s.kind)::kBacktrack) {
      if (trail.size() > 1) trail.pop_back();
    } else {
      trail.push_back({s.next, s.confidence()});
    }
  }
  return trail;
}

/// Corrective action after a revert. Minimizes the next node's hop distance to
/// the goal; ties go to the largest 1{azimuth on a shortest path} * cos(azimuth
/// - lexicographic path azimuth), then to the lowest index. `dist` must come
/// from hop_distances_to(g, goal).
inline int b3_hint(const NavGraph& g, const NodeId& v, double heading, const std::vector<int>& dist) {
  const NodeIndex vi = g.require(v);
  const auto views = perspectives(g, v, heading);
  if (views.empty()) throw std::invalid_argument("node '" + v + "' has no navigable edge");
  auto key = [&](const NodeId& id) {
    const int d = dist[g.require(id)];
    return d < 0 ? INT_MAX : d;
  };
  // Shortest-path first edges and the lexicographic one.
  std::vector<const NavEdge*> optimal;
  const NavEdge* lex = nullptr;
  if (dist[vi] > 0) {
    for (const auto& e : g.out_edges(vi)) {
      if (dist[g.require(e.to)] == dist[vi] - 1) {
        optimal.push_back(&e);
        if (!lex || e.to < lex->to) lex = &e;
      }
    }
  }
  auto phi = [&](const Perspective& p) {
    for (const NavEdge* e : optimal) {
      if (e->to == p.target) return std::cos(deg_to_rad(p.heading - lex->azimuth));
    }
    return 0.0;
  };
  int best = 0;
  int best_d = key(views[0].target);
  double best_phi = phi(views[0]);
  for (std::size_t i = 1; i < views.size(); ++i) {
    const int d = key(views[i].target);
    const double f = phi(views[i]);
    if (d < best_d || (d == best_d && f > best_phi)) {
      best = views[i].index;
      best_d = d;
      best_phi = f;
    }
  }
  return best;
}

inline int b3_hint(const NavGraph& g, const NodeId& v, double heading, const NodeId& goal) {
  return b3_hint(g, v, heading, hop_distances_to(g, g.require(goal)));
}

enum class Cognition { kNone, kC1, kC2 };

/// Enabled mechanisms and their parameters.
struct StrategyStack {
  bool b1 = false;
  bool b2 = false;
  bool b3 = false;
  Cognition cognition = Cognition::kNone;
  bool r1 = false;
  bool r2 = false;
  bool r3 = false;
  int k = kDefaultWindowK;
  double theta = kDefaultTheta;
  int r1_hops = 1;
  double r2_radius_m = 50.0;
  int r3_window = 3;

  bool confidence_trigger() const { return b1 || b3; }
  bool any_backtracking() const { return b1 || b2 || b3; }
  bool retrieval() const { return r1 || r2; }
  bool empty() const { return !any_backtracking() && cognition == Cognition::kNone && !r1 && !r2 && !r3; }

  /// Canonical comma-separated form, e.g. "B1,B3,C1,R3"; "none" when empty.
  std::string label() const {
    std::vector<std::string> parts;
    if (b1) parts.push_back("B1");
    if (b2) parts.push_back("B2");
    if (b3) parts.push_back("B3");
    if (cognition == Cognition::kC1) parts.push_back("C1");
    if (cognition == Cognition::kC2) parts.push_back("C2");
    if (r1) parts.push_back("R1");
    if (r2) parts.push_back("R2");
    if (r3) parts.push_back("R3");
    if (parts.empty()) return "none";
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
    return out;
  }
};

inline void validate(const StrategyStack& s) {
  if (s.k < 1) throw std::invalid_argument("strategy k must be >= 1");
  if (!(s.theta >= 0.0 && s.theta <= 1.0)) throw std::invalid_argument("strategy theta must be in [0,1]");
  if (s.r1_hops < 0) throw std::invalid_argument("r1 hops must be >= 0");
  if (!(s.r2_radius_m > 0.0)) throw std::invalid_argument("r2 radius must be positive");
  if (s.r3_window < 1) throw std::invalid_argument("r3 window must be >= 1");
}

/// Parses "B1,B3,R3" (commas or '+', case-insensitive). "" and "none" give an
/// empty stack. C1 and C2 share one prompt slot and cannot be combined.
inline StrategyStack parse_strategy_stack(std::string_view text) {
  StrategyStack s;
  std::string token;
  auto flush = [&] {
    std::string t;
    for (char c : token) {
      if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::toupper(c)));
    }
    token.clear();
    if (t.empty() || t == "NONE") return;
    if (t == "B1") s.b1 = true;
    else if (t == "B2") s.b2 = true;
    else if (t == "B3") s.b3 = true;
    else if (t == "C1" || t == "C2") {
      const Cognition c = t == "C1" ? Cognition::kC1 : Cognition::kC2;
      if (s.cognition != Cognition::kNone && s.cognition != c)
        throw std::invalid_argument("C1 and C2 cannot be combined");
      s.cognition = c;
    } else if (t == "R1") s.r1 = true;
    else if (t == "R2") s.r2 = true;
    else if (t == "R3") s.r3 = true;
    else throw std::invalid_argument("unknown strategy '" + t + "'");
  };
  for (char c : text) {
    if (c == ',' || c == '+') flush();
    else token.push_back(c);
  }
  flush();
  return s;
}

inline json strategy_stack_to_json(const StrategyStack& s) {
  return {{"mechanisms", s.label()}, {"k", s.k},           {"theta", s.theta},
          {"r1_hops", s.r1_hops},    {"r2_radius_m", s.r2_radius_m}, {"r3_window", s.r3_window}};
}

/// Accepts either a plain string ("B3,R3") or an object with "mechanisms" and parameters.
inline StrategyStack strategy_stack_from_json(const json& j) {
  if (j.is_null()) return {};
  if (j.is_string()) return parse_strategy_stack(j.get<std::string>());
  StrategyStack s = parse_strategy_stack(j.value("mechanisms", std::string{}));
  s.k = j.value("k", s.k);
  s.theta = j.value("theta", s.theta);
  s.r1_hops = j.value("r1_hops", s.r1_hops);
  s.r2_radius_m = j.value("r2_radius_m", s.r2_radius_m);
  s.r3_window = j.value("r3_window", s.r3_window);
  validate(s);
  return s;
}

}  // namespace urbnav

#endif  // URBNAV_STRATEGIES_HPP
