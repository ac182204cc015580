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

#ifndef URBNAV_ROUTING_HPP
#define URBNAV_ROUTING_HPP

#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "urbnav/graph.hpp"

namespace urbnav {

/// Explicit "no path" marker for hop distances.
inline constexpr int kUnreachable = -1;

struct Path {
  std::vector<NodeId> nodes;
  double cost = 0.0;

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

/// A* search. Hop weight uses geodesic / (1.05 * longest edge) as heuristic and
/// meter weight uses geodesic / 1.05; both are admissible because every edge
/// length is within 5% of the geodesic between its endpoints.
inline std::optional<Path> shortest_path(const NavGraph& g, const NodeId& from, const NodeId& to,
                                         PathWeight weight = PathWeight::kHops) {
  const NodeIndex s = g.require(from);
  const NodeIndex t = g.require(to);
  if (s == t) return Path{{from}, 0.0};

  const LatLon goal = g.node(t).pos;
  const double hop_scale = g.max_edge_length() > 0.0 ? 1.0 / ((1.0 + kEdgeLengthTolerance) * g.max_edge_length()) : 0.0;
  auto heuristic = [&](NodeIndex v) {
    const double d = geodesic_distance(g.node(v).pos, goal);
    return weight == PathWeight::kHops ? d * hop_scale : d / (1.0 + kEdgeLengthTolerance);
  };

  const std::size_t n = g.node_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n, kInf);
  std::vector<NodeIndex> parent(n, std::numeric_limits<NodeIndex>::max());
  std::vector<bool> closed(n, false);
  // (f, g, node); ties resolved by node index for determinism.
  using Entry = std::tuple<double, double, NodeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  cost[s] = 0.0;
  open.emplace(heuristic(s), 0.0, s);
  while (!open.empty()) {
    auto [f, gc, u] = open.top();
    open.pop();
    if (closed[u]) continue;
    closed[u] = true;
    if (u == t) break;
    auto edges = g.out_edges(u);
    auto targets = g.out_targets(u);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const NodeIndex v = targets[k];
      if (closed[v]) continue;
      const double step = weight == PathWeight::kHops ? 1.0 : edges[k].length_m;
      const double c = gc + step;
      if (c < cost[v]) {
        cost[v] = c;
        parent[v] = u;
        open.emplace(c + heuristic(v), c, v);
      }
    }
  }
  if (!closed[t]) return std::nullopt;
  Path p;
  p.cost = cost[t];
  for (NodeIndex v = t;; v = parent[v]) {
    p.nodes.push_back(g.node(v).id);
    if (v == s) break;
  }
  std::reverse(p.nodes.begin(), p.nodes.end());
  return p;
}

/// Hop distance from every node to `target` (BFS over reversed edges).
/// Unreachable nodes hold kUnreachable.
inline std::vector<int> hop_distances_to(const NavGraph& g, NodeIndex target) {
  std::vector<int> dist(g.node_count(), kUnreachable);
  std::deque<NodeIndex> queue{target};
  dist[target] = 0;
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    for (NodeIndex u : g.in_sources(v)) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

/// Hop distance from `source` to every node.
inline std::vector<int> hop_distances_from(const NavGraph& g, NodeIndex source) {
  std::vector<int> dist(g.node_count(), kUnreachable);
  std::deque<NodeIndex> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeIndex u = queue.front();
    queue.pop_front();
    for (NodeIndex v : g.out_targets(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

/// Minimum hop count from `from` to `to`, or kUnreachable.
inline int topo_distance(const NavGraph& g, const NodeId& from, const NodeId& to) {
  const NodeIndex s = g.require(from);
  const NodeIndex t = g.require(to);
  if (s == t) return 0;
  return hop_distances_from(g, s)[t];
}

/// The hop-shortest path whose node-id sequence is lexicographically smallest.
/// `dist_to_target` must come from hop_distances_to(g, target).
inline std::optional<std::vector<NodeIndex>> lexicographic_shortest_path(const NavGraph& g, NodeIndex from,
                                                                         NodeIndex target,
                                                                         const std::vector<int>& dist_to_target) {
  if (dist_to_target[from] == kUnreachable) return std::nullopt;
  std::vector<NodeIndex> path{from};
  NodeIndex v = from;
  while (v != target) {
    std::optional<NodeIndex> best;
    for (NodeIndex u : g.out_targets(v)) {
      if (dist_to_target[u] != dist_to_target[v] - 1) continue;
      if (!best || g.node(u).id < g.node(*best).id) best = u;
    }
    v = *best;
    path.push_back(v);
  }
  return path;
}

inline std::optional<std::vector<NodeId>> lexicographic_shortest_path(const NavGraph& g, const NodeId& from,
                                                                      const NodeId& to) {
  const NodeIndex t = g.require(to);
  auto dist = hop_distances_to(g, t);
  auto idx = lexicographic_shortest_path(g, g.require(from), t, dist);
  if (!idx) return std::nullopt;
  std::vector<NodeId> out;
  for (NodeIndex i : *idx) out.push_back(g.node(i).id);
  return out;
}

/// Sum of edge lengths along a node sequence; throws GraphError on a missing edge.
inline double path_length_m(const NavGraph& g, const std::vector<NodeId>& nodes) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const NavEdge* e = g.find_edge(nodes[i - 1], nodes[i]);
    if (!e) throw GraphError("no edge " + nodes[i - 1] + "->" + nodes[i]);
    total += e->length_m;
  }
  return total;
}

}  // namespace urbnav

#endif  // URBNAV_ROUTING_HPP
