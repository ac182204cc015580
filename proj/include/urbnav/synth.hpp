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

// Deterministic synthetic cities: a street graph, POIs scattered along the
// streets, and one textual observation per (node, navigable heading).

#ifndef URBNAV_SYNTH_HPP
#define URBNAV_SYNTH_HPP

#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "urbnav/graph_io.hpp"
#include "urbnav/rng.hpp"

namespace urbnav {

inline constexpr double kViewHalfAngleDeg = 60.0;

enum class Layout { kGrid, kIrregular };

struct CategoryEntry {
  std::string category;
  std::vector<std::string> descriptors;
  std::vector<std::string> names;
};

struct CitySpec {
  std::string city = "synth";
  Layout layout = Layout::kGrid;
  int rows = 10;
  int cols = 10;
  int node_count = 100;  // irregular only
  double jitter = 0.2;   // irregular only, fraction of spacing
  double spacing_m = 20.0;
  double poi_density = 0.05;
  std::vector<CategoryEntry> catalog;
  std::uint64_t seed = 1;
  LatLon origin{40.7128, -74.0060};
};

struct ObservationTag {
  PoiId poi;
  double salience = 0.0;
};

struct ObservationText {
  NodeId node;
  double heading = 0.0;
  std::string text;
  std::vector<ObservationTag> visible_tags;
};

struct City {
  NavGraph graph;
  std::vector<ObservationText> observations;
};

/// POI categories, descriptors and name pools used when a CitySpec leaves the
/// catalog empty. Covers the categories referenced by data/need_catalog.json.
inline std::vector<CategoryEntry> default_category_catalog() {
  const std::vector<std::string> dining = {"Romantic", "Upscale", "Outdoor seating", "Family-friendly", "Groups",
                                           "Wheelchair accessible entrance", "Roadside parking", "Cozy"};
  const std::vector<std::string> access = {"Wheelchair accessible entrance"};
  return {
      {"Cafe", {"Cozy", "Outdoor seating", "Wi-Fi"}, {"Starbucks", "Blue Bottle Coffee", "Corner Cafe"}},
      {"Restaurant", dining, {"Trattoria Roma", "Golden Dragon", "Le Petit Bistro"}},
      {"Ramen restaurant", dining, {"Ichiran", "Noodle House"}},
      {"Fast food restaurant", access, {"McDonald's", "KFC", "Five Guys"}},
      {"Convenience store", access, {"7-ELEVEn", "FamilyMart", "Corner Mart"}},
      {"Supermarket", access, {"Whole Foods", "Fresh Market"}},
      {"Bank", access, {"Chase Bank", "Citibank"}},
      {"ATM", {}, {"Cash Point"}},
      {"Pharmacy", access, {"CVS Pharmacy", "Walgreens"}},
      {"Hospital", access, {"City General Hospital"}},
      {"Subway station", access, {"Central Station", "Elm Street Station"}},
      {"Bus stop", {}, {"Route 12 Stop", "Crosstown Stop"}},
      {"Park", {"Family-friendly"}, {"Hyde Park", "Riverside Green"}},
      {"Playground", {"Family-friendly"}, {"Kids Corner"}},
      {"Shopping mall", access, {"Westfield Mall", "Galleria"}},
      {"Gym", {}, {"Iron Works Gym", "Fitness First"}},
      {"Movie theater", access, {"Cineplex", "Odeon"}},
      {"Public bathroom", access, {"Public Restroom"}},
      {"Book store", {"Cozy"}, {"Page One Books", "Barnes & Noble"}},
      {"Public library", access, {"Elm Branch Library"}},
      {"Clothing store", access, {"Uniqlo", "Zara"}},
      {"Cell phone store", {}, {"Best Buy", "Phone Hub"}},
      {"Parking lot", {}, {"City Parking", "Park & Go"}},
      {"Bubble tea store", {}, {"Tea Time", "Boba Bar"}},
  };
}

inline void validate(const CitySpec& spec) {
  if (!(spec.spacing_m > 0.0) || !std::isfinite(spec.spacing_m)) throw std::invalid_argument("spacing must be > 0");
  if (!(spec.jitter >= 0.0 && spec.jitter < 0.5)) throw std::invalid_argument("jitter must be in [0, 0.5)");
  if (!(spec.poi_density >= 0.0) || !std::isfinite(spec.poi_density))
    throw std::invalid_argument("poi_density must be >= 0");
  if (spec.layout == Layout::kGrid && (spec.rows < 1 || spec.cols < 1))
    throw std::invalid_argument("grid needs rows, cols >= 1");
  if (spec.layout == Layout::kIrregular && spec.node_count < 1)
    throw std::invalid_argument("irregular layout needs node_count >= 1");
  if (!is_valid(spec.origin)) throw std::invalid_argument("origin coordinates invalid");
  for (const auto& c : spec.catalog) {
    if (c.category.empty()) throw std::invalid_argument("catalog category must be non-empty");
    if (c.names.empty()) throw std::invalid_argument("catalog entry '" + c.category + "' has no names");
  }
}

namespace detail {

inline std::string compass_label(double heading) {
  static const char* const kLabels[] = {"north", "northeast", "east", "southeast",
                                        "south", "southwest", "west", "northwest"};
  const int k = static_cast<int>(std::floor(normalize_heading(heading + 22.5) / 45.0)) % 8;
  return kLabels[k];
}

inline std::string format_degrees(double d) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(0) << d;
  return ss.str();
}

inline std::string grid_id(int r, int c, int width) {
  std::ostringstream ss;
  ss << 'r' << std::setw(width) << std::setfill('0') << r << 'c' << std::setw(width) << std::setfill('0') << c;
  return ss.str();
}

inline int id_width(int n) {
  int w = 1;
  for (int m = std::max(n - 1, 0); m >= 10; m /= 10) ++w;
  return std::max(w, 2);
}

}  // namespace detail

/// Salience of a POI seen from `distance_m` away.
inline double salience_for_distance(double distance_m) {
  return std::clamp(1.0 - distance_m / kVisibilityRadiusM, 0.1, 1.0);
}

/// Observation for one navigable heading at `v`. Throws std::invalid_argument
/// if `heading` is not one of the node's headings.
inline ObservationText describe_view(const NavGraph& g, const NodeId& v, double heading) {
  const NavNode& node = g.node(v);
  const bool navigable = std::any_of(node.headings.begin(), node.headings.end(), [&](double h) {
    return std::abs(signed_angle_diff(h, heading)) <= kHeadingToleranceDeg;
  });
  if (!navigable) throw std::invalid_argument("heading " + std::to_string(heading) + " is not navigable at " + v);

  struct Seen {
    std::size_t poi;
    double distance;
  };
  std::vector<Seen> seen;
  for (std::size_t p : g.visible_poi_indices(g.require(v))) {
    const Poi& poi = g.poi(p);
    const double d = geodesic_distance(node.pos, poi.pos);
    if (d > kVisibilityRadiusM) continue;
    const double bearing = d > 0.0 ? initial_bearing(node.pos, poi.pos) : heading;
    if (std::abs(signed_angle_diff(heading, bearing)) > kViewHalfAngleDeg) continue;
    seen.push_back({p, d});
  }
  std::sort(seen.begin(), seen.end(), [&](const Seen& a, const Seen& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return g.poi(a.poi).id < g.poi(b.poi).id;
  });

  ObservationText obs;
  obs.node = v;
  obs.heading = heading;
  std::ostringstream text;
  text << "Facing " << detail::format_degrees(heading) << " degrees (" << detail::compass_label(heading) << ").";
  if (seen.empty()) {
    text << " Nothing notable in view, only the street.";
  } else {
    text << " In view:";
    for (std::size_t k = 0; k < seen.size(); ++k) {
      const Poi& poi = g.poi(seen[k].poi);
      text << (k == 0 ? " " : "; ") << poi.name << ", a " << poi.category << " about "
           << detail::format_degrees(seen[k].distance) << " m away";
      if (!poi.descriptors.empty()) {
        text << " (";
        for (std::size_t d = 0; d < poi.descriptors.size(); ++d) text << (d ? ", " : "") << poi.descriptors[d];
        text << ")";
      }
      obs.visible_tags.push_back({poi.id, salience_for_distance(seen[k].distance)});
    }
    text << ".";
  }
  obs.text = text.str();
  return obs;
}

/// Generates a city. Output is a pure function of `spec`.
inline City generate_city(const CitySpec& spec_in) {
  CitySpec spec = spec_in;
  validate(spec);
  if (spec.catalog.empty()) spec.catalog = default_category_catalog();
  Rng rng(spec.seed);

  struct Cell {
    int r;
    int c;
  };
  std::vector<NavNode> nodes;
  std::vector<Cell> cells;
  std::map<std::pair<int, int>, std::size_t> at;
  int rows = spec.rows;
  int cols = spec.cols;
  int count = rows * cols;
  if (spec.layout == Layout::kIrregular) {
    cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.node_count))));
    rows = (spec.node_count + cols - 1) / cols;
    count = spec.node_count;
  }
  const int width = detail::id_width(std::max(rows, cols));
  for (int i = 0; i < count; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    double north = r * spec.spacing_m;
    double east = c * spec.spacing_m;
    if (spec.layout == Layout::kIrregular) {
      north += rng.uniform(-spec.jitter, spec.jitter) * spec.spacing_m;
      east += rng.uniform(-spec.jitter, spec.jitter) * spec.spacing_m;
    }
    NavNode n;
    n.id = detail::grid_id(r, c, width);
    n.pos = offset_meters(spec.origin, north, east);
    at[{r, c}] = nodes.size();
    nodes.push_back(std::move(n));
    cells.push_back({r, c});
  }

  std::vector<NavEdge> edges;
  auto connect = [&](std::size_t a, std::size_t b, double az_ab) {
    if (spec.layout == Layout::kGrid) {
      edges.push_back({nodes[a].id, nodes[b].id, az_ab, spec.spacing_m});
      edges.push_back({nodes[b].id, nodes[a].id, normalize_heading(az_ab + 180.0), spec.spacing_m});
    } else {
      const double len = geodesic_distance(nodes[a].pos, nodes[b].pos);
      edges.push_back({nodes[a].id, nodes[b].id, initial_bearing(nodes[a].pos, nodes[b].pos), len});
      edges.push_back({nodes[b].id, nodes[a].id, initial_bearing(nodes[b].pos, nodes[a].pos), len});
    }
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto [r, c] = cells[i];
    if (auto it = at.find({r, c + 1}); it != at.end()) connect(i, it->second, 90.0);
    if (auto it = at.find({r + 1, c}); it != at.end()) connect(i, it->second, 0.0);
  }
  std::map<NodeId, std::size_t> by_id;
  for (std::size_t i = 0; i < nodes.size(); ++i) by_id[nodes[i].id] = i;
  for (const auto& e : edges) nodes[by_id[e.from]].headings.push_back(e.azimuth);
  for (auto& n : nodes) std::sort(n.headings.begin(), n.headings.end());

  std::vector<Poi> pois;
  const auto poi_count = static_cast<std::size_t>(std::llround(spec.poi_density * static_cast<double>(nodes.size())));
  const int poi_width = detail::id_width(static_cast<int>(poi_count) + 1);
  for (std::size_t k = 0; k < poi_count; ++k) {
    const CategoryEntry& entry = spec.catalog[rng.index(spec.catalog.size())];
    const NavNode& anchor = nodes[rng.index(nodes.size())];
    const double bearing = rng.uniform(0.0, 360.0);
    const double dist = rng.uniform(4.0, 16.0);
    Poi p;
    std::ostringstream id;
    id << 'p' << std::setw(poi_width) << std::setfill('0') << (k + 1);
    p.id = id.str();
    // The "(k)" suffix keeps every name unique and never a substring of another.
    p.name = entry.names[rng.index(entry.names.size())] + " (" + std::to_string(k + 1) + ")";
    p.category = entry.category;
    for (const auto& d : entry.descriptors) {
      if (rng.bernoulli(0.35)) p.descriptors.push_back(d);
    }
    p.pos = offset_meters(anchor.pos, dist * std::cos(deg_to_rad(bearing)), dist * std::sin(deg_to_rad(bearing)));
    pois.push_back(std::move(p));
  }

  auto links = compute_visibility(nodes, pois);
  City city;
  city.graph = NavGraph::build(std::move(nodes), std::move(edges), std::move(pois), std::move(links));
  for (const auto& n : city.graph.nodes()) {
    for (double h : n.headings) city.observations.push_back(describe_view(city.graph, n.id, h));
  }
  return city;
}

// ---------------------------------------------------------------------------
// Observation table file: {observations:[{node,heading,text,tags:[{poi,salience}]}]}

class ObservationTable {
 public:
  ObservationTable() = default;
  explicit ObservationTable(std::vector<ObservationText> rows) {
    for (auto& r : rows) by_node_[r.node].push_back(std::move(r));
  }

  /// Observation for (node, heading) if present (heading matched within 1 degree).
  const ObservationText* find(const NodeId& node, double heading) const {
    auto it = by_node_.find(node);
    if (it == by_node_.end()) return nullptr;
    for (const auto& o : it->second) {
      if (std::abs(signed_angle_diff(o.heading, heading)) <= kHeadingToleranceDeg) return &o;
    }
    return nullptr;
  }
  bool empty() const { return by_node_.empty(); }

 private:
  std::map<NodeId, std::vector<ObservationText>> by_node_;
};

inline json observations_to_json(const std::vector<ObservationText>& rows) {
  json doc;
  doc["observations"] = json::array();
  for (const auto& o : rows) {
    json tags = json::array();
    for (const auto& t : o.visible_tags) tags.push_back({{"poi", t.poi}, {"salience", t.salience}});
    doc["observations"].push_back({{"node", o.node}, {"heading", o.heading}, {"text", o.text}, {"tags", tags}});
  }
  return doc;
}

inline std::vector<ObservationText> observations_from_json(const json& doc) {
  std::vector<ObservationText> rows;
  try {
    for (const auto& j : doc.at("observations")) {
      ObservationText o;
      o.node = j.at("node").get<std::string>();
      o.heading = j.at("heading").get<double>();
      o.text = j.at("text").get<std::string>();
      for (const auto& t : j.value("tags", json::array()))
        o.visible_tags.push_back({t.at("poi").get<std::string>(), t.at("salience").get<double>()});
      rows.push_back(std::move(o));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("observation table: ") + e.what());
  }
  return rows;
}

inline json city_spec_to_json(const CitySpec& s) {
  json cat = json::array();
  for (const auto& c : s.catalog)
    cat.push_back({{"category", c.category}, {"descriptors", c.descriptors}, {"names", c.names}});
  return {{"city", s.city},
          {"layout", s.layout == Layout::kGrid ? "grid" : "irregular"},
          {"rows", s.rows},
          {"cols", s.cols},
          {"node_count", s.node_count},
          {"jitter", s.jitter},
          {"spacing_m", s.spacing_m},
          {"poi_density", s.poi_density},
          {"catalog", cat},
          {"seed", s.seed},
          {"origin", {{"lat", s.origin.lat}, {"lon", s.origin.lon}}}};
}

/// Missing fields keep their CitySpec defaults.
inline CitySpec city_spec_from_json(const json& j) {
  CitySpec s;
  try {
    s.city = j.value("city", s.city);
    const std::string layout = j.value("layout", std::string("grid"));
    if (layout == "grid") {
      s.layout = Layout::kGrid;
    } else if (layout == "irregular") {
      s.layout = Layout::kIrregular;
    } else {
      throw InputError("unknown layout '" + layout + "'");
    }
    s.rows = j.value("rows", s.rows);
    s.cols = j.value("cols", s.cols);
    s.node_count = j.value("node_count", s.node_count);
    s.jitter = j.value("jitter", s.jitter);
    s.spacing_m = j.value("spacing_m", s.spacing_m);
    s.poi_density = j.value("poi_density", s.poi_density);
    s.seed = j.value("seed", s.seed);
    if (j.contains("origin")) s.origin = {j.at("origin").at("lat").get<double>(), j.at("origin").at("lon").get<double>()};
    for (const auto& c : j.value("catalog", json::array())) {
      s.catalog.push_back({c.at("category").get<std::string>(),
                           c.value("descriptors", std::vector<std::string>{}),
                           c.at("names").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("city spec: ") + e.what());
  }
  return s;
}

}  // namespace urbnav

#endif  // URBNAV_SYNTH_HPP
