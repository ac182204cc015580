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

// Shared fixtures for the test binaries and the acceptance runner.

#ifndef URBNAV_TESTS_SUPPORT_HPP
#define URBNAV_TESTS_SUPPORT_HPP

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "urbnav/urbnav.hpp"

namespace urbnav::testing {

inline const LatLon kOrigin{40.7128, -74.0060};

/// Plain grid with no POIs; ids r00c00 .. and row index growing northward.
inline NavGraph grid(int rows, int cols, double spacing = 20.0) {
  CitySpec s;
  s.rows = rows;
  s.cols = cols;
  s.spacing_m = spacing;
  s.poi_density = 0.0;
  return generate_city(s).graph;
}

inline std::string gid(int r, int c) { return detail::grid_id(r, c, 2); }

struct PoiSpec {
  std::string id;
  std::string name;
  std::string category;
  double north = 0.0;
  double east = 0.0;
  std::vector<std::string> descriptors{};
};

/// Graph from planar node positions (meters north/east of the origin) and
/// undirected edges; azimuths and lengths are derived from the positions.
inline NavGraph planar(const std::vector<std::pair<std::string, std::pair<double, double>>>& nodes,
                       const std::vector<std::pair<std::string, std::string>>& links,
                       const std::vector<PoiSpec>& pois = {}) {
  std::vector<NavNode> ns;
  std::map<std::string, std::size_t> at;
  for (const auto& [id, ne] : nodes) {
    at[id] = ns.size();
    ns.push_back({id, offset_meters(kOrigin, ne.first, ne.second), {}});
  }
  std::vector<NavEdge> es;
  for (const auto& [a, b] : links) {
    const LatLon pa = ns[at.at(a)].pos;
    const LatLon pb = ns[at.at(b)].pos;
    const double len = geodesic_distance(pa, pb);
    es.push_back({a, b, initial_bearing(pa, pb), len});
    es.push_back({b, a, initial_bearing(pb, pa), len});
  }
  for (const auto& e : es) ns[at.at(e.from)].headings.push_back(e.azimuth);
  for (auto& n : ns) std::sort(n.headings.begin(), n.headings.end());
  std::vector<Poi> ps;
  for (const auto& p : pois)
    ps.push_back({p.id, p.name, p.category, p.descriptors, offset_meters(kOrigin, p.north, p.east)});
  auto vis = compute_visibility(ns, ps);
  return NavGraph::build(std::move(ns), std::move(es), std::move(ps), std::move(vis));
}

/// East-running line n0 - n1 - ... with `spacing` meters between nodes.
inline NavGraph line(int n, double spacing = 20.0, const std::vector<PoiSpec>& pois = {}) {
  std::vector<std::pair<std::string, std::pair<double, double>>> nodes;
  std::vector<std::pair<std::string, std::string>> links;
  for (int i = 0; i < n; ++i) {
    nodes.push_back({"n" + std::to_string(i), {0.0, i * spacing}});
    if (i) links.push_back({"n" + std::to_string(i - 1), "n" + std::to_string(i)});
  }
  return planar(nodes, links, pois);
}

/// Task with the lexicographic shortest path as ground truth; no validity checks.
inline Task make_task(const NavGraph& g, const std::string& id, const NodeId& start, const NodeId& goal,
                      NeedMapping m = {}, const std::string& city = "test") {
  Task t;
  t.id = id;
  t.city = city;
  t.instruction = m.instruction.empty() ? "Find the place." : m.instruction;
  t.category = m.category;
  t.mapping = m;
  t.start = start;
  t.goal = goal;
  t.satisfying_nodes = query_satisfying_nodes(g, m);
  auto path = lexicographic_shortest_path(g, start, goal);
  if (path) t.gt_path = *path;
  return t;
}

/// The 20x20 city and task suite used by the acceptance criteria.
struct Bench {
  City city;
  std::vector<Task> tasks;
};

inline std::filesystem::path source_dir() {
#ifdef URBNAV_SOURCE_DIR
  return URBNAV_SOURCE_DIR;
#else
  return std::filesystem::current_path();
#endif
}

inline std::vector<NeedMapping> catalog() { return load_need_catalog(source_dir() / "data" / "need_catalog.json"); }

inline City city20(std::uint64_t seed = 42, double density = 0.05) {
  CitySpec s;
  s.city = "synth20";
  s.rows = 20;
  s.cols = 20;
  s.poi_density = density;
  s.seed = seed;
  return generate_city(s);
}

/// A policy that plays a fixed list of choice actions and never stops unless told to.
class ScriptedPolicy : public Policy {
 public:
  ScriptedPolicy(std::vector<int> choices, std::vector<double> confidences, bool stop_at_end = true)
      : choices_(std::move(choices)), conf_(std::move(confidences)), stop_at_end_(stop_at_end) {}
  Decision decide(const PolicyInput& in) override {
    Decision d;
    d.phase = in.phase;
    if (in.phase == Phase::kStop) {
      d.action = (stop_at_end_ && next_ >= choices_.size()) ? kActionStop : kActionContinue;
      d.confidence = 1.0;
      return d;
    }
    d.action = next_ < choices_.size() ? choices_[next_] : 0;
    d.confidence = next_ < conf_.size() ? conf_[next_] : 1.0;
    ++next_;
    return d;
  }
  std::string name() const override { return "scripted"; }

 private:
  std::vector<int> choices_;
  std::vector<double> conf_;
  bool stop_at_end_;
  std::size_t next_ = 0;
};

/// Index of the perspective at `v` (facing `heading`) that leads to `target`.
inline int action_to(const NavGraph& g, const NodeId& v, double heading, const NodeId& target) {
  for (const auto& p : perspectives(g, v, heading)) {
    if (p.target == target) return p.index;
  }
  return -1;
}

}  // namespace urbnav::testing

#endif  // URBNAV_TESTS_SUPPORT_HPP
