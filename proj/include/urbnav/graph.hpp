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

// Georeferenced navigation graph: panorama nodes, azimuth-annotated directed
// edges, points of interest and the node->POI visibility relation.
//
// A NavGraph is immutable once built. Every constructor path goes through
// NavGraph::build(), which validates all structural invariants and throws
// GraphError naming the offending node/edge ids.

#ifndef URBNAV_GRAPH_HPP
#define URBNAV_GRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "urbnav/geo.hpp"

namespace urbnav {

using NodeId = std::string;
using PoiId = std::string;
using NodeIndex = std::uint32_t;

inline constexpr double kHeadingToleranceDeg = 1.0;
inline constexpr double kEdgeLengthTolerance = 0.05;
inline constexpr double kVisibilityRadiusM = 50.0;
inline constexpr double kIndexCellM = 100.0;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NavNode {
  NodeId id;
  LatLon pos;
  std::vector<double> headings;  // sorted ascending, distinct, in [0, 360)
};

struct NavEdge {
  NodeId from;
  NodeId to;
  double azimuth = 0.0;  // [0, 360)
  double length_m = 0.0;
};

struct Poi {
  PoiId id;
  std::string name;
  std::string category;
  std::vector<std::string> descriptors;
  LatLon pos;
};

struct VisibilityLink {
  NodeId node;
  PoiId poi;
};

enum class PathWeight { kHops, kMeters };

struct Neighbor {
  const NavEdge* edge;
  const NavNode* node;
};

class NavGraph {
 public:
  NavGraph() = default;

  /// Validates and assembles a graph. Throws GraphError on any violation.
  static NavGraph build(std::vector<NavNode> nodes, std::vector<NavEdge> edges, std::vector<Poi> pois,
                        std::vector<VisibilityLink> visibility);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::vector<NavNode>& nodes() const { return nodes_; }
  const std::vector<Poi>& pois() const { return pois_; }
  const std::vector<VisibilityLink>& visibility() const { return visibility_; }

  std::optional<NodeIndex> index_of(const NodeId& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }
  bool has_node(const NodeId& id) const { return node_index_.contains(id); }

  /// Throws GraphError for unknown ids.
  NodeIndex require(const NodeId& id) const {
    auto idx = index_of(id);
    if (!idx) throw GraphError("unknown node id '" + id + "'");
    return *idx;
  }

  const NavNode& node(NodeIndex i) const { return nodes_[i]; }
  const NavNode& node(const NodeId& id) const { return nodes_[require(id)]; }

  /// Outgoing edges of node `i`, ordered by azimuth ascending.
  std::span<const NavEdge> out_edges(NodeIndex i) const { return adjacency_[i]; }
  std::span<const NodeIndex> out_targets(NodeIndex i) const { return targets_[i]; }
  std::span<const NodeIndex> in_sources(NodeIndex i) const { return reverse_[i]; }

  /// Edge u->v if present.
  const NavEdge* find_edge(NodeIndex u, NodeIndex v) const {
    const auto& t = targets_[u];
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] == v) return &adjacency_[u][k];
    }
    return nullptr;
  }
  const NavEdge* find_edge(const NodeId& u, const NodeId& v) const {
    auto a = index_of(u);
    auto b = index_of(v);
    if (!a || !b) return nullptr;
    return find_edge(*a, *b);
  }

  std::optional<std::size_t> poi_index(const PoiId& id) const {
    auto it = poi_index_.find(id);
    if (it == poi_index_.end()) return std::nullopt;
    return it->second;
  }
  const Poi& poi(std::size_t i) const { return pois_[i]; }

  /// Indices into pois() visible from node `i`, ordered by POI id.
  std::span<const std::size_t> visible_poi_indices(NodeIndex i) const { return visible_[i]; }

  /// Node indices whose position lies within `radius_m` of `center`, ascending.
  std::vector<NodeIndex> nodes_within_radius_idx(const LatLon& center, double radius_m) const;

  /// Longest edge length in the graph (0 for an edgeless graph).
  double max_edge_length() const { return max_edge_length_; }

 private:
  struct CellKey {
    std::int64_t row;
    std::int64_t col;
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
  };

  CellKey cell_of(const LatLon& p) const {
    return {static_cast<std::int64_t>(std::floor(p.lat / cell_lat_deg_)),
            static_cast<std::int64_t>(std::floor(p.lon / cell_lon_deg_))};
  }
  void build_index();

  std::vector<NavNode> nodes_;
  std::vector<std::vector<NavEdge>> adjacency_;
  std::vector<std::vector<NodeIndex>> targets_;
  std::vector<std::vector<NodeIndex>> reverse_;
  std::vector<Poi> pois_;
  std::vector<VisibilityLink> visibility_;
  std::vector<std::vector<std::size_t>> visible_;
  std::unordered_map<NodeId, NodeIndex> node_index_;
  std::unordered_map<PoiId, std::size_t> poi_index_;
  std::size_t edge_count_ = 0;
  double max_edge_length_ = 0.0;

  // Fixed-cell grid over node positions.
  double cell_lat_deg_ = 1.0;
  double cell_lon_deg_ = 1.0;
  std::map<CellKey, std::vector<NodeIndex>> cells_;
};

namespace detail {

inline bool heading_matches(double a, double b, double tol) {
  return std::abs(signed_angle_diff(a, b)) <= tol;
}

}  // namespace detail

inline NavGraph NavGraph::build(std::vector<NavNode> nodes, std::vector<NavEdge> edges, std::vector<Poi> pois,
                                std::vector<VisibilityLink> visibility) {
  NavGraph g;
  g.nodes_ = std::move(nodes);
  g.pois_ = std::move(pois);
  g.visibility_ = std::move(visibility);

  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    const auto& n = g.nodes_[i];
    if (n.id.empty()) throw GraphError("node at position " + std::to_string(i) + " has an empty id");
    if (!is_valid(n.pos)) throw GraphError("node '" + n.id + "' has invalid coordinates");
    for (std::size_t h = 0; h < n.headings.size(); ++h) {
      const double hd = n.headings[h];
      if (!std::isfinite(hd) || hd < 0.0 || hd >= 360.0)
        throw GraphError("node '" + n.id + "' has heading out of [0,360)");
      if (h > 0 && !(n.headings[h - 1] < hd))
        throw GraphError("node '" + n.id + "' headings are not strictly ascending");
    }
    if (!g.node_index_.emplace(n.id, static_cast<NodeIndex>(i)).second)
      throw GraphError("duplicate node id '" + n.id + "'");
  }

  const std::size_t n = g.nodes_.size();
  g.adjacency_.assign(n, {});
  g.targets_.assign(n, {});
  g.reverse_.assign(n, {});
  std::set<std::pair<NodeIndex, NodeIndex>> seen;
  for (auto& e : edges) {
    auto u = g.index_of(e.from);
    if (!u) throw GraphError("dangling edge: unknown source node '" + e.from + "' (edge " + e.from + "->" + e.to + ")");
    auto v = g.index_of(e.to);
    if (!v) throw GraphError("dangling edge: unknown target node '" + e.to + "' (edge " + e.from + "->" + e.to + ")");
    const std::string label = "edge " + e.from + "->" + e.to;
    if (*u == *v) throw GraphError(label + " is a self-loop");
    if (!seen.emplace(*u, *v).second) throw GraphError("duplicate " + label);
    if (!std::isfinite(e.azimuth) || e.azimuth < 0.0 || e.azimuth >= 360.0)
      throw GraphError(label + " has azimuth out of [0,360)");
    if (!std::isfinite(e.length_m) || e.length_m <= 0.0) throw GraphError(label + " has non-positive length");
    const auto& from = g.nodes_[*u];
    const bool heading_ok = std::any_of(from.headings.begin(), from.headings.end(), [&](double h) {
      return detail::heading_matches(h, e.azimuth, kHeadingToleranceDeg);
    });
    if (!heading_ok) throw GraphError(label + " azimuth does not match any heading of '" + e.from + "'");
    const double geo = geodesic_distance(from.pos, g.nodes_[*v].pos);
    if (std::abs(e.length_m - geo) > kEdgeLengthTolerance * geo)
      throw GraphError(label + " length deviates from geodesic distance by more than 5%");
    g.max_edge_length_ = std::max(g.max_edge_length_, e.length_m);
    g.adjacency_[*u].push_back(std::move(e));
  }
  g.edge_count_ = seen.size();
  for (const auto& [u, v] : seen) {
    if (!seen.contains({v, u}))
      throw GraphError("edge " + g.nodes_[u].id + "->" + g.nodes_[v].id + " has no reverse edge");
  }

  for (NodeIndex i = 0; i < n; ++i) {
    auto& adj = g.adjacency_[i];
    std::sort(adj.begin(), adj.end(), [](const NavEdge& a, const NavEdge& b) {
      if (a.azimuth != b.azimuth) return a.azimuth < b.azimuth;
      return a.to < b.to;
    });
    for (const auto& e : adj) {
      const NodeIndex t = g.node_index_.at(e.to);
      g.targets_[i].push_back(t);
      g.reverse_[t].push_back(i);
    }
  }
  for (auto& r : g.reverse_) std::sort(r.begin(), r.end());

  for (std::size_t i = 0; i < g.pois_.size(); ++i) {
    const auto& p = g.pois_[i];
    if (p.id.empty()) throw GraphError("POI at position " + std::to_string(i) + " has an empty id");
    if (p.category.empty()) throw GraphError("POI '" + p.id + "' has an empty category");
    if (!is_valid(p.pos)) throw GraphError("POI '" + p.id + "' has invalid coordinates");
    if (!g.poi_index_.emplace(p.id, i).second) throw GraphError("duplicate POI id '" + p.id + "'");
  }

  g.visible_.assign(n, {});
  std::set<std::pair<NodeIndex, std::size_t>> links;
  for (const auto& l : g.visibility_) {
    auto v = g.index_of(l.node);
    if (!v) throw GraphError("visibility link references unknown node '" + l.node + "'");
    auto p = g.poi_index(l.poi);
    if (!p) throw GraphError("visibility link references unknown POI '" + l.poi + "'");
    if (geodesic_distance(g.nodes_[*v].pos, g.pois_[*p].pos) > kVisibilityRadiusM)
      throw GraphError("visibility link " + l.node + "->" + l.poi + " exceeds 50 m");
    if (!links.emplace(*v, *p).second) throw GraphError("duplicate visibility link " + l.node + "->" + l.poi);
    g.visible_[*v].push_back(*p);
  }
  for (auto& vis : g.visible_) {
    std::sort(vis.begin(), vis.end(),
              [&](std::size_t a, std::size_t b) { return g.pois_[a].id < g.pois_[b].id; });
  }

  g.build_index();
  return g;
}

inline void NavGraph::build_index() {
  cells_.clear();
  if (nodes_.empty()) return;
  double lat_sum = 0.0;
  for (const auto& n : nodes_) lat_sum += n.pos.lat;
  const double ref_lat = lat_sum / static_cast<double>(nodes_.size());
  cell_lat_deg_ = rad_to_deg(kIndexCellM / kEarthRadiusM);
  cell_lon_deg_ = cell_lat_deg_ / std::max(std::cos(deg_to_rad(ref_lat)), 1e-6);
  for (NodeIndex i = 0; i < nodes_.size(); ++i) cells_[cell_of(nodes_[i].pos)].push_back(i);
}

inline std::vector<NodeIndex> NavGraph::nodes_within_radius_idx(const LatLon& center, double radius_m) const {
  std::vector<NodeIndex> out;
  if (nodes_.empty() || !(radius_m > 0.0)) return out;

  auto scan_all = [&] {
    for (NodeIndex i = 0; i < nodes_.size(); ++i) {
      if (geodesic_distance(center, nodes_[i].pos) <= radius_m) out.push_back(i);
    }
    return out;
  };

  // Conservative lat/lon bounding box of the query disk. Latitude extent is
  // exact along a meridian; the longitude extent uses the smallest cosine over
  // the latitude band so no point of the disk falls outside the box.
  const double ang = radius_m / kEarthRadiusM;
  if (ang >= std::numbers::pi / 4) return scan_all();
  const double dlat = rad_to_deg(ang) * (1.0 + 1e-9);
  const double lat_lo = center.lat - dlat;
  const double lat_hi = center.lat + dlat;
  if (lat_lo <= -90.0 || lat_hi >= 90.0) return scan_all();
  const double cos_min = std::min(std::cos(deg_to_rad(lat_lo)), std::cos(deg_to_rad(lat_hi)));
  const double cos_c = std::cos(deg_to_rad(center.lat));
  const double s = std::sin(ang / 2.0);
  const double bound = (s * s) / (cos_c * cos_min);
  if (bound >= 1.0) return scan_all();
  const double dlon = rad_to_deg(2.0 * std::asin(std::sqrt(bound))) * (1.0 + 1e-9);
  const double lon_lo = center.lon - dlon;
  const double lon_hi = center.lon + dlon;
  if (lon_lo < -180.0 || lon_hi > 180.0) return scan_all();

  const CellKey lo = cell_of({lat_lo, lon_lo});
  const CellKey hi = cell_of({lat_hi, lon_hi});
  const auto span_cells = static_cast<double>(hi.row - lo.row + 1) * static_cast<double>(hi.col - lo.col + 1);
  if (span_cells > static_cast<double>(cells_.size())) {
    for (const auto& [key, members] : cells_) {
      if (key.row < lo.row || key.row > hi.row || key.col < lo.col || key.col > hi.col) continue;
      for (NodeIndex i : members) {
        if (geodesic_distance(center, nodes_[i].pos) <= radius_m) out.push_back(i);
      }
    }
  } else {
    for (std::int64_t r = lo.row; r <= hi.row; ++r) {
      auto it = cells_.lower_bound({r, lo.col});
      for (; it != cells_.end() && it->first.row == r && it->first.col <= hi.col; ++it) {
        for (NodeIndex i : it->second) {
          if (geodesic_distance(center, nodes_[i].pos) <= radius_m) out.push_back(i);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Free-function queries over node ids.

/// Outgoing (edge, target node) pairs ordered by azimuth ascending.
inline std::vector<Neighbor> neighbors(const NavGraph& g, const NodeId& v) {
  const NodeIndex i = g.require(v);
  std::vector<Neighbor> out;
  auto edges = g.out_edges(i);
  auto targets = g.out_targets(i);
  out.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) out.push_back({&edges[k], &g.node(targets[k])});
  return out;
}

/// POIs linked to `v`, ordered by POI id.
inline std::vector<Poi> visible_pois(const NavGraph& g, const NodeId& v) {
  std::vector<Poi> out;
  for (std::size_t p : g.visible_poi_indices(g.require(v))) out.push_back(g.poi(p));
  return out;
}

/// Ids of nodes within `radius_m` (inclusive) of `center`, in graph order.
inline std::vector<NodeId> nodes_within_radius(const NavGraph& g, const LatLon& center, double radius_m) {
  if (!(radius_m > 0.0)) throw std::invalid_argument("radius must be positive");
  std::vector<NodeId> out;
  for (NodeIndex i : g.nodes_within_radius_idx(center, radius_m)) out.push_back(g.node(i).id);
  return out;
}

/// All (node, poi) pairs within the visibility radius.
inline std::vector<VisibilityLink> compute_visibility(const std::vector<NavNode>& nodes, const std::vector<Poi>& pois,
                                                      double radius_m = kVisibilityRadiusM) {
  std::vector<VisibilityLink> out;
  for (const auto& n : nodes) {
    for (const auto& p : pois) {
      if (geodesic_distance(n.pos, p.pos) <= radius_m) out.push_back({n.id, p.id});
    }
  }
  return out;
}

}  // namespace urbnav

#endif  // URBNAV_GRAPH_HPP
