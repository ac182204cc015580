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

// Geodesy, graph loading, routing, spatial queries, city synthesis, perspectives.

#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <numbers>
#include <set>

#include "support.hpp"

namespace urbnav {
namespace {

using testing::gid;

std::filesystem::path tmp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("urbnav_geo_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Independent haversine, written out from the closed form.
double haversine_oracle(double lat1, double lon1, double lat2, double lon2) {
  const double r = 6371008.8;
  const double k = std::numbers::pi / 180.0;
  const double a = std::pow(std::sin((lat2 - lat1) * k / 2), 2) +
                   std::cos(lat1 * k) * std::cos(lat2 * k) * std::pow(std::sin((lon2 - lon1) * k / 2), 2);
  return 2 * r * std::asin(std::sqrt(a));
}

// ---------------------------------------------------------------------------
// Geodesy

TEST(Geodesic, IdentityIsZero) {
  const LatLon p{40.7128, -74.0060};
  EXPECT_EQ(geodesic_distance(p, p), 0.0);
}

TEST(Geodesic, MilliDegreeOfLongitudeAtEquator) {
  // R * 0.001 deg in radians = 111.195 m for R = 6371.0088 km.
  const double d = geodesic_distance({0.0, 0.0}, {0.0, 0.001});
  EXPECT_NEAR(d, 6371008.8 * 0.001 * std::numbers::pi / 180.0, 1e-6);
  EXPECT_NEAR(d, 111.195, 0.001);
}

TEST(Geodesic, MilliDegreeOfLatitudeInManhattan) {
  const double d = geodesic_distance({40.7128, -74.0060}, {40.7138, -74.0060});
  EXPECT_NEAR(d, 111.2, 0.2);
  EXPECT_NEAR(d, haversine_oracle(40.7128, -74.0060, 40.7138, -74.0060), 1e-6);
}

TEST(Geodesic, SymmetricNonNegativeAndTriangleInequality) {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    LatLon a{rng.uniform(-80, 80), rng.uniform(-180, 180)};
    LatLon b{rng.uniform(-80, 80), rng.uniform(-180, 180)};
    LatLon c{rng.uniform(-80, 80), rng.uniform(-180, 180)};
    if (i % 2) {  // city-scale triples as well as global ones
      b = offset_meters(a, rng.uniform(-500, 500), rng.uniform(-500, 500));
      c = offset_meters(a, rng.uniform(-500, 500), rng.uniform(-500, 500));
    }
    const double ab = geodesic_distance(a, b);
    ASSERT_GE(ab, 0.0);
    ASSERT_DOUBLE_EQ(ab, geodesic_distance(b, a));
    ASSERT_LE(geodesic_distance(a, c), ab + geodesic_distance(b, c) + 1e-6);
    ASSERT_NEAR(ab, haversine_oracle(a.lat, a.lon, b.lat, b.lon), 1e-6);
  }
}

TEST(Geodesic, BearingsAndAngleDifferences) {
  const LatLon o{40.0, -74.0};
  EXPECT_NEAR(initial_bearing(o, offset_meters(o, 100, 0)), 0.0, 1e-6);
  EXPECT_NEAR(initial_bearing(o, offset_meters(o, 0, 100)), 90.0, 1e-3);
  EXPECT_NEAR(signed_angle_diff(350, 10), 20.0, 1e-12);
  EXPECT_NEAR(signed_angle_diff(10, 350), -20.0, 1e-12);
  EXPECT_NEAR(signed_angle_diff(0, 180), 180.0, 1e-12);
  EXPECT_NEAR(normalize_heading(-90), 270.0, 1e-12);
  EXPECT_NEAR(normalize_heading(360), 0.0, 1e-12);
}

// ---------------------------------------------------------------------------
// Graph loading

json two_node_doc() {
  const LatLon a{40.0, -74.0};
  const LatLon b = offset_meters(a, 0, 20);
  return json{{"nodes", {{{"id", "a"}, {"lat", a.lat}, {"lon", a.lon}, {"headings", {90.0}}},
                         {{"id", "b"}, {"lat", b.lat}, {"lon", b.lon}, {"headings", {270.0}}}}},
              {"edges", {{{"from", "a"}, {"to", "b"}, {"azimuth", 90.0}, {"length_m", 20.0}},
                         {{"from", "b"}, {"to", "a"}, {"azimuth", 270.0}, {"length_m", 20.0}}}},
              {"pois", json::array()},
              {"visibility", json::array()}};
}

TEST(LoadGraph, MinimalTwoNodeFile) {
  const auto dir = tmp_dir("min");
  write_text_file(dir / "g.json", two_node_doc().dump());
  const NavGraph g = load_graph(dir / "g.json");
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(LoadGraph, DanglingEdgeNamesTheMissingNode) {
  json doc = two_node_doc();
  doc["edges"][0]["to"] = "ghost";
  try {
    graph_from_json(doc);
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("dangling"), std::string::npos) << e.what();
  }
}

TEST(LoadGraph, AzimuthMustMatchAHeading) {
  json doc = two_node_doc();
  doc["edges"][0]["azimuth"] = 92.5;  // beyond the 1 degree tolerance
  EXPECT_THROW(graph_from_json(doc), GraphError);
  doc["edges"][0]["azimuth"] = 90.8;  // within it
  EXPECT_NO_THROW(graph_from_json(doc));
}

TEST(LoadGraph, RejectsMissingReverseEdgeBadLengthAndSchema) {
  json doc = two_node_doc();
  doc["edges"].erase(1);
  doc["nodes"][1]["headings"] = json::array();
  EXPECT_THROW(graph_from_json(doc), GraphError);

  doc = two_node_doc();
  doc["edges"][0]["length_m"] = 25.0;  // 25% off the geodesic
  EXPECT_THROW(graph_from_json(doc), GraphError);

  doc = two_node_doc();
  doc["nodes"][0].erase("lat");
  EXPECT_THROW(graph_from_json(doc), GraphError);

  doc = two_node_doc();
  doc["nodes"][0]["lat"] = 90.0;  // pole
  EXPECT_THROW(graph_from_json(doc), GraphError);

  EXPECT_THROW(load_graph("/nonexistent/graph.json"), GraphError);
}

TEST(LoadGraph, SyntheticTenByTenRoundTrip) {
  const auto dir = tmp_dir("grid10");
  CitySpec s;
  s.poi_density = 0.1;
  const City c = generate_city(s);
  save_graph(c.graph, dir / "g.json");
  const NavGraph g = load_graph(dir / "g.json");
  EXPECT_EQ(g.node_count(), 100u);
  EXPECT_EQ(g.edge_count(), 360u);  // 2 * (10*9 + 9*10)
  EXPECT_EQ(graph_to_json(g).dump(), graph_to_json(c.graph).dump());
  save_graph(g, dir / "g2.json");
  EXPECT_EQ(read_text_file(dir / "g.json"), read_text_file(dir / "g2.json"));
}

// ---------------------------------------------------------------------------
// Neighbors

TEST(Neighbors, InteriorCornerAndDeadEnd) {
  const NavGraph g = testing::grid(3, 3);
  const auto inner = neighbors(g, gid(1, 1));
  ASSERT_EQ(inner.size(), 4u);
  const double expected[] = {0, 90, 180, 270};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(inner[i].edge->azimuth, expected[i], 1e-9);
  EXPECT_EQ(inner[0].node->id, gid(2, 1));
  EXPECT_EQ(neighbors(g, gid(0, 0)).size(), 2u);

  const NavGraph l = testing::line(3);
  const auto end = neighbors(l, "n2");
  ASSERT_EQ(end.size(), 1u);
  EXPECT_EQ(end[0].node->id, "n1");
  EXPECT_THROW(neighbors(l, "zz"), GraphError);
}

// ---------------------------------------------------------------------------
// Routing

TEST(ShortestPath, Examples) {
  const NavGraph g = testing::grid(5, 5);
  auto self = shortest_path(g, gid(2, 2), gid(2, 2));
  ASSERT_TRUE(self);
  EXPECT_EQ(self->nodes.size(), 1u);
  EXPECT_EQ(self->cost, 0.0);

  auto corner = shortest_path(g, gid(0, 0), gid(4, 4));
  ASSERT_TRUE(corner);
  EXPECT_EQ(corner->hops(), 8u);
  EXPECT_EQ(corner->nodes.front(), gid(0, 0));
  EXPECT_EQ(corner->nodes.back(), gid(4, 4));

  auto meters = shortest_path(g, gid(0, 0), gid(4, 4), PathWeight::kMeters);
  ASSERT_TRUE(meters);
  EXPECT_NEAR(meters->cost, 160.0, 1e-9);

  const NavGraph two = testing::planar({{"a", {0, 0}}, {"b", {0, 20}}, {"c", {100, 0}}, {"d", {100, 20}}},
                                       {{"a", "b"}, {"c", "d"}});
  EXPECT_FALSE(shortest_path(two, "a", "d").has_value());
  EXPECT_THROW(shortest_path(two, "a", "zz"), GraphError);
}

TEST(ShortestPath, MeterWeightPrefersShorterDetour) {
  // a-b direct is long (two hops of 100 m via x), a-c-d-b is 3 hops of 20 m... build so hops and meters disagree.
  const NavGraph g = testing::planar(
      {{"a", {0, 0}}, {"x", {0, 60}}, {"b", {0, 120}}, {"c", {5, 40}}, {"d", {5, 80}}},
      {{"a", "x"}, {"x", "b"}, {"a", "c"}, {"c", "d"}, {"d", "b"}});
  auto hops = shortest_path(g, "a", "b", PathWeight::kHops);
  auto m = shortest_path(g, "a", "b", PathWeight::kMeters);
  ASSERT_TRUE(hops && m);
  EXPECT_EQ(hops->hops(), 2u);
  EXPECT_NEAR(m->cost, path_length_m(g, m->nodes), 1e-9);
  EXPECT_LE(m->cost, path_length_m(g, hops->nodes) + 1e-9);
}

TEST(TopoDistance, Examples) {
  const NavGraph g = testing::grid(5, 5);
  EXPECT_EQ(topo_distance(g, gid(0, 0), gid(0, 1)), 1);
  EXPECT_EQ(topo_distance(g, gid(3, 3), gid(3, 3)), 0);
  EXPECT_EQ(topo_distance(g, gid(0, 0), gid(4, 4)), 8);
  const NavGraph two = testing::planar({{"a", {0, 0}}, {"b", {0, 20}}, {"c", {100, 0}}, {"d", {100, 20}}},
                                       {{"a", "b"}, {"c", "d"}});
  EXPECT_EQ(topo_distance(two, "a", "c"), kUnreachable);
}

std::vector<int> bfs_oracle(const NavGraph& g, NodeIndex s) {
  std::vector<int> d(g.node_count(), -1);
  std::deque<NodeIndex> q{s};
  d[s] = 0;
  while (!q.empty()) {
    auto u = q.front();
    q.pop_front();
    for (const auto& e : g.out_edges(u)) {
      auto v = g.require(e.to);
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        q.push_back(v);
      }
    }
  }
  return d;
}

TEST(ShortestPath, AStarMatchesBfsOnAllPairs) {
  CitySpec s;
  s.layout = Layout::kIrregular;
  s.node_count = 100;
  s.jitter = 0.3;
  s.seed = 5;
  const NavGraph g = generate_city(s).graph;
  ASSERT_LE(g.node_count(), 100u);
  for (NodeIndex a = 0; a < g.node_count(); ++a) {
    const auto oracle = bfs_oracle(g, a);
    const auto from = hop_distances_from(g, a);
    for (NodeIndex b = 0; b < g.node_count(); ++b) {
      auto p = shortest_path(g, g.node(a).id, g.node(b).id);
      ASSERT_TRUE(p);
      ASSERT_EQ(static_cast<int>(p->hops()), oracle[b]);
      ASSERT_EQ(from[b], oracle[b]);
      for (std::size_t k = 1; k < p->nodes.size(); ++k) ASSERT_NE(g.find_edge(p->nodes[k - 1], p->nodes[k]), nullptr);
    }
  }
}

TEST(LexicographicPath, PicksLowestIdAmongShortest) {
  const NavGraph g = testing::grid(3, 3);
  auto p = lexicographic_shortest_path(g, gid(0, 0), gid(1, 1));
  ASSERT_TRUE(p);
  // Both r00c01 and r01c00 are one hop closer; r00c01 sorts first.
  EXPECT_EQ(*p, (std::vector<NodeId>{gid(0, 0), gid(0, 1), gid(1, 1)}));
}

// ---------------------------------------------------------------------------
// Spatial queries

TEST(NodesWithinRadius, Examples) {
  const NavGraph g = testing::grid(9, 9);
  const LatLon c = g.node(gid(4, 4)).pos;
  EXPECT_EQ(nodes_within_radius(g, c, 10.0), std::vector<NodeId>{gid(4, 4)});
  // Offsets (dr, dc) with dr^2 + dc^2 <= 6.25 in 20 m units: 1 + 4 + 4 + 4 + 8 = 21,
  // counting the (2,1) knight offsets at 44.7 m.
  const auto disk = nodes_within_radius(g, c, 50.0);
  EXPECT_EQ(disk.size(), 21u);
  std::set<NodeId> want;
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      if (dr * dr + dc * dc <= 6) want.insert(gid(4 + dr, 4 + dc));
    }
  }
  EXPECT_EQ(std::set<NodeId>(disk.begin(), disk.end()), want);
  EXPECT_EQ(nodes_within_radius(g, c, 1e6).size(), 81u);
  EXPECT_THROW(nodes_within_radius(g, c, 0.0), std::invalid_argument);
}

TEST(NodesWithinRadius, MatchesBruteForceOnRandomQueries) {
  CitySpec s;
  s.layout = Layout::kIrregular;
  s.node_count = 400;
  s.jitter = 0.45;
  s.seed = 17;
  const NavGraph g = generate_city(s).graph;
  Rng rng(99);
  const LatLon o = g.node(0).pos;
  for (int q = 0; q < 1000; ++q) {
    const LatLon c = offset_meters(o, rng.uniform(-100, 500), rng.uniform(-100, 500));
    const double r = rng.uniform(0.5, 300.0);
    std::vector<NodeIndex> brute;
    for (NodeIndex i = 0; i < g.node_count(); ++i) {
      if (geodesic_distance(c, g.node(i).pos) <= r) brute.push_back(i);
    }
    ASSERT_EQ(g.nodes_within_radius_idx(c, r), brute) << "query " << q;
  }
}

TEST(VisiblePois, Examples) {
  using testing::PoiSpec;
  const NavGraph g = testing::planar({{"a", {0, 0}}, {"b", {0, 200}}}, {{"a", "b"}},
                                     {{"p2", "Two", "Cafe", 0, 230}, {"p1", "One", "Bank", 10, 200},
                                      {"p3", "Near", "Cafe", 49, 0}, {"p4", "Far", "Cafe", -51, 0}});
  const auto at_b = visible_pois(g, "b");
  ASSERT_EQ(at_b.size(), 2u);
  EXPECT_EQ(at_b[0].id, "p1");
  EXPECT_EQ(at_b[1].id, "p2");
  const auto at_a = visible_pois(g, "a");
  ASSERT_EQ(at_a.size(), 1u);
  EXPECT_EQ(at_a[0].id, "p3");

  const NavGraph empty = testing::line(2);
  EXPECT_TRUE(visible_pois(empty, "n0").empty());
}

TEST(VisiblePois, LinkBeyondFiftyMetresIsRejected) {
  std::vector<NavNode> ns{{"a", testing::kOrigin, {}}};
  std::vector<Poi> ps{{"p", "P", "Cafe", {}, offset_meters(testing::kOrigin, 55, 0)}};
  EXPECT_THROW(NavGraph::build(ns, {}, ps, {{"a", "p"}}), GraphError);
}

// ---------------------------------------------------------------------------
// City synthesis

TEST(GenerateCity, ThreeByThreeCounts) {
  CitySpec s;
  s.rows = 3;
  s.cols = 3;
  s.seed = 7;
  const City c = generate_city(s);
  EXPECT_EQ(c.graph.node_count(), 9u);
  EXPECT_EQ(c.graph.edge_count(), 24u);
}

TEST(GenerateCity, DeterministicPerSeed) {
  CitySpec s;
  s.rows = 8;
  s.cols = 6;
  s.poi_density = 0.3;
  s.seed = 11;
  const City a = generate_city(s);
  const City b = generate_city(s);
  EXPECT_EQ(graph_to_json(a.graph).dump(), graph_to_json(b.graph).dump());
  EXPECT_EQ(observations_to_json(a.observations).dump(), observations_to_json(b.observations).dump());
  s.seed = 12;
  EXPECT_NE(graph_to_json(generate_city(s).graph).dump(), graph_to_json(a.graph).dump());

  s.layout = Layout::kIrregular;
  s.node_count = 50;
  EXPECT_EQ(graph_to_json(generate_city(s).graph).dump(), graph_to_json(generate_city(s).graph).dump());
}

TEST(GenerateCity, ZeroDensityHasNoPois) {
  CitySpec s;
  s.poi_density = 0.0;
  const City c = generate_city(s);
  EXPECT_TRUE(c.graph.pois().empty());
  EXPECT_TRUE(c.graph.visibility().empty());
}

TEST(GenerateCity, GridStructureAndVisibilityLinks) {
  const City c = testing::city20(3, 0.2);
  const NavGraph& g = c.graph;
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const auto& id = g.node(i).id;
    const int r = std::stoi(id.substr(1, 2));
    const int col = std::stoi(id.substr(4, 2));
    const bool interior = r > 0 && r < 19 && col > 0 && col < 19;
    if (interior) {
      ASSERT_EQ(g.out_edges(i).size(), 4u) << id;
    }
    for (const auto& e : g.out_edges(i)) ASSERT_NEAR(e.length_m, 20.0, 1e-6);
  }
  // Links are exactly the pairs within 50 m.
  std::set<std::pair<NodeId, PoiId>> links;
  for (const auto& l : g.visibility()) links.insert({l.node, l.poi});
  for (const auto& n : g.nodes()) {
    for (const auto& p : g.pois()) ASSERT_EQ(links.contains({n.id, p.id}), geodesic_distance(n.pos, p.pos) <= 50.0);
  }
}

TEST(GenerateCity, RejectsInvalidSpecs) {
  CitySpec s;
  s.spacing_m = 0;
  EXPECT_THROW(generate_city(s), std::invalid_argument);
  s = CitySpec{};
  s.layout = Layout::kIrregular;
  s.jitter = 0.5;
  EXPECT_THROW(generate_city(s), std::invalid_argument);
}

TEST(DescribeView, ConeAndRadius) {
  using testing::PoiSpec;
  const NavGraph g = testing::planar({{"a", {0, 0}}, {"n", {20, 0}}, {"s", {-20, 0}}}, {{"a", "n"}, {"a", "s"}},
                                     {{"c1", "Blue Bottle", "Cafe", 30, 0}, {"c2", "Far Cafe", "Cafe", -51, 0}});
  const auto north = describe_view(g, "a", 0.0);
  EXPECT_NE(north.text.find("Blue Bottle"), std::string::npos);
  ASSERT_EQ(north.visible_tags.size(), 1u);
  EXPECT_EQ(north.visible_tags[0].poi, "c1");
  EXPECT_NEAR(north.visible_tags[0].salience, 1.0 - 30.0 / 50.0, 1e-6);

  const auto south = describe_view(g, "a", 180.0);
  EXPECT_EQ(south.text.find("Blue Bottle"), std::string::npos);
  EXPECT_EQ(south.text.find("Far Cafe"), std::string::npos);
  EXPECT_TRUE(south.visible_tags.empty());

  EXPECT_THROW(describe_view(g, "a", 90.0), std::invalid_argument);
}

TEST(DescribeView, TagsEqualBruteForceConeFilter) {
  const City c = testing::city20(8, 0.3);
  const NavGraph& g = c.graph;
  for (const auto& o : c.observations) {
    const NavNode& n = g.node(o.node);
    std::set<PoiId> want;
    for (const auto& p : g.pois()) {
      const double d = geodesic_distance(n.pos, p.pos);
      if (d > 50.0) continue;
      const double b = d > 0 ? initial_bearing(n.pos, p.pos) : o.heading;
      if (std::abs(signed_angle_diff(o.heading, b)) <= 60.0) want.insert(p.id);
    }
    std::set<PoiId> got;
    for (const auto& t : o.visible_tags) {
      got.insert(t.poi);
      const Poi& p = g.poi(*g.poi_index(t.poi));
      // The name appears exactly once.
      const auto first = o.text.find(p.name);
      ASSERT_NE(first, std::string::npos);
      ASSERT_EQ(o.text.find(p.name, first + 1), std::string::npos);
      ASSERT_GT(t.salience, 0.0);
      ASSERT_LE(t.salience, 1.0);
    }
    ASSERT_EQ(got, want) << o.node << " @" << o.heading;
  }
}

TEST(DescribeView, SalienceDecreasesWithDistance) {
  EXPECT_DOUBLE_EQ(salience_for_distance(0), 1.0);
  EXPECT_DOUBLE_EQ(salience_for_distance(25), 0.5);
  EXPECT_DOUBLE_EQ(salience_for_distance(49), 0.1);
  EXPECT_GT(salience_for_distance(10), salience_for_distance(20));
}

TEST(ObservationTable, RoundTripAndLookup) {
  const City c = testing::city20(4, 0.1);
  const auto rows = observations_from_json(observations_to_json(c.observations));
  ASSERT_EQ(rows.size(), c.observations.size());
  ObservationTable table(rows);
  const auto& o = c.observations[5];
  const auto* hit = table.find(o.node, o.heading + 0.5);
  ASSERT_NE(hit, nullptr);
  EXPECT_EQ(hit->text, o.text);
  EXPECT_EQ(table.find(o.node, o.heading + 45.0), nullptr);
}

// ---------------------------------------------------------------------------
// Perspectives

TEST(Perspectives, FourWayFacingNorth) {
  const NavGraph g = testing::grid(3, 3);
  const auto v = perspectives(g, gid(1, 1), 0.0);
  ASSERT_EQ(v.size(), 4u);
  const Direction want[] = {Direction::kForward, Direction::kRight, Direction::kBack, Direction::kLeft};
  const double heads[] = {0, 90, 180, 270};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(v[i].index, i);
    EXPECT_EQ(v[i].direction, want[i]);
    EXPECT_NEAR(v[i].heading, heads[i], 1e-9);
  }
}

TEST(Perspectives, OrderIsForwardThenClockwise) {
  const NavGraph g = testing::grid(3, 3);
  const auto v = perspectives(g, gid(1, 1), 180.0);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_NEAR(v[0].heading, 180, 1e-9);
  EXPECT_EQ(v[0].direction, Direction::kForward);
  EXPECT_NEAR(v[1].heading, 270, 1e-9);
  EXPECT_EQ(v[1].direction, Direction::kRight);
  EXPECT_NEAR(v[2].heading, 0, 1e-9);
  EXPECT_EQ(v[2].direction, Direction::kBack);
  EXPECT_NEAR(v[3].heading, 90, 1e-9);
  EXPECT_EQ(v[3].direction, Direction::kLeft);
}

TEST(Perspectives, WraparoundAndDeadEnd) {
  const NavGraph g = testing::planar({{"a", {0, 0}}, {"b", {19.7, 3.47}}}, {{"a", "b"}});
  const auto v = perspectives(g, "a", 350.0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].direction, Direction::kForward);
  EXPECT_NEAR(v[0].delta, 20.0, 0.1);

  const NavGraph l = testing::line(3);
  const auto end = perspectives(l, "n2", 90.0);  // arrived heading east
  ASSERT_EQ(end.size(), 1u);
  EXPECT_EQ(end[0].direction, Direction::kBack);
  EXPECT_EQ(end[0].target, "n1");
}

TEST(Perspectives, TurnBucketsAtBoundaries) {
  EXPECT_EQ(classify_turn(45.0), Direction::kForward);
  EXPECT_EQ(classify_turn(-45.0), Direction::kForward);
  EXPECT_EQ(classify_turn(45.1), Direction::kRight);
  EXPECT_EQ(classify_turn(135.0), Direction::kRight);
  EXPECT_EQ(classify_turn(135.1), Direction::kBack);
  EXPECT_EQ(classify_turn(-135.0), Direction::kLeft);
  EXPECT_EQ(classify_turn(-135.1), Direction::kBack);
  EXPECT_EQ(classify_turn(180.0), Direction::kBack);
}

TEST(Perspectives, InitialHeadingIsLowestAzimuth) {
  const NavGraph g = testing::grid(3, 3);
  EXPECT_NEAR(initial_heading(g, gid(1, 1)), 0.0, 1e-9);
  EXPECT_NEAR(initial_heading(g, gid(2, 2)), 180.0, 1e-9);  // only south and west
}

}  // namespace
}  // namespace urbnav
