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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "support.hpp"

namespace {

using namespace urbnav;
using namespace urbnav::testing;

double haversine_oracle(LatLon a, LatLon b) {
  const double r = 6371008.8;
  const double p1 = a.lat * M_PI / 180, p2 = b.lat * M_PI / 180;
  const double dp = p2 - p1, dl = (b.lon - a.lon) * M_PI / 180;
  const double h = std::pow(std::sin(dp / 2), 2) + std::cos(p1) * std::cos(p2) * std::pow(std::sin(dl / 2), 2);
  return 2 * r * std::asin(std::sqrt(h));
}

// Walks `nodes` (start first) and ends with the given termination.
Trajectory walk(const NavGraph& g, const Task& t, const std::vector<NodeId>& nodes,
                Termination term = Termination::kStopped, std::vector<std::size_t> backtracks = {}) {
  Trajectory tr;
  tr.task_id = t.id;
  tr.start = nodes.front();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    StepRecord s;
    s.index = static_cast<int>(i - 1);
    s.kind = std::find(backtracks.begin(), backtracks.end(), i) != backtracks.end() ? StepKind::kBacktrack
                                                                                     : StepKind::kMove;
    s.node = nodes[i - 1];
    s.next = nodes[i];
    const NavEdge* e = g.find_edge(s.node, s.next);
    s.edge_azimuth = e ? e->azimuth : 0.0;
    s.edge_length_m = e ? e->length_m : 0.0;
    tr.steps.push_back(s);
  }
  if (term == Termination::kStopped) {
    StepRecord s;
    s.index = static_cast<int>(tr.steps.size());
    s.kind = StepKind::kStop;
    s.node = nodes.back();
    tr.steps.push_back(s);
  }
  tr.terminal = nodes.back();
  tr.termination = term;
  return tr;
}

std::vector<NodeId> ids(int from, int to) {
  std::vector<NodeId> out;
  for (int i = from; from <= to ? i <= to : i >= to; from <= to ? ++i : --i) out.push_back("n" + std::to_string(i));
  return out;
}

NeedMapping cafe() {
  NeedMapping m;
  m.categories = {"Cafe"};
  return m;
}

// Line n0..n9, 20 m apart, cafes at n6 and n9 and a bank at n3.
NavGraph shops() {
  return line(10, 20.0,
              {{"c1", "Cafe One", "Cafe", 2, 180}, {"c2", "Cafe Two", "Cafe", 2, 120}, {"b", "Bank", "Bank", 2, 60}});
}

// ---- endpoint metrics -------------------------------------------------------

TEST(Tce, Examples) {
  auto g = line(6);
  auto t = make_task(g, "t", "n0", "n5");
  EXPECT_TRUE(tce(walk(g, t, ids(0, 5)), t));
  EXPECT_FALSE(tce(walk(g, t, ids(0, 4)), t));
  EXPECT_FALSE(tce(walk(g, t, ids(0, 5), Termination::kStepCap), t));
}

TEST(Tcp, ThresholdsAndBoundary) {
  auto g = planar({{"g", {0, 0}}, {"a", {0, 30}}, {"b", {0, 55}}}, {{"g", "a"}, {"a", "b"}});
  auto t = make_task(g, "t", "b", "g");
  auto at_a = walk(g, t, {"b", "a"});
  EXPECT_TRUE(tcp(g, at_a, t, 50));
  auto at_b = walk(g, t, {"b"});
  EXPECT_FALSE(tcp(g, at_b, t, 50));
  EXPECT_TRUE(tcp(g, at_b, t, 60));
  const double exact = geodesic_distance(g.node("b").pos, g.node("g").pos);
  EXPECT_TRUE(tcp(g, at_b, t, exact));
  EXPECT_FALSE(tcp(g, walk(g, t, {"b", "a"}, Termination::kStepCap), t, 50));
}

TEST(Tcc, AnySatisfyingEndpoint) {
  auto g = shops();
  auto t = make_task(g, "t", "n0", "n9", cafe());
  EXPECT_TRUE(tcc(g, walk(g, t, ids(0, 6)), t));   // the other cafe
  EXPECT_FALSE(tcc(g, walk(g, t, ids(0, 3)), t));  // bank
  EXPECT_TRUE(tcc(g, walk(g, t, ids(0, 9)), t));
  EXPECT_FALSE(tcc(g, walk(g, t, ids(0, 9), Termination::kStepCap), t));
}

TEST(Spl, Examples) {
  auto g = line(5);
  auto t = make_task(g, "t", "n0", "n2");
  EXPECT_DOUBLE_EQ(spl_term(g, walk(g, t, ids(0, 2)), t), 1.0);
  // p = 80 m against l = 40 m
  EXPECT_NEAR(spl_term(g, walk(g, t, {"n0", "n1", "n0", "n1", "n2"}, Termination::kStopped, {2}), t), 0.5, 1e-9);
  EXPECT_EQ(spl_term(g, walk(g, t, ids(0, 2), Termination::kStepCap), t), 0.0);
  // stopping on the start of a zero-length task succeeds with SPL 1
  auto z = make_task(g, "z", "n1", "n1");
  EXPECT_DOUBLE_EQ(spl_term(g, walk(g, z, {"n1"}), z), 1.0);
}

TEST(Spd, Examples) {
  auto g = line(26, 20.0);
  auto t = make_task(g, "t", "n0", "n25");
  EXPECT_NEAR(spd(g, walk(g, t, ids(0, 25)), t), 0.0, 1e-9);
  EXPECT_NEAR(spd(g, walk(g, t, {"n0"}), t), haversine_oracle(g.node("n0").pos, g.node("n25").pos), 1e-6);
  EXPECT_NEAR(spd(g, walk(g, t, {"n0"}), t), 500.0, 0.01);
  EXPECT_NEAR(spd(g, walk(g, t, ids(0, 24)), t), 20.0, 0.01);
}

// ---- nDTW -------------------------------------------------------------------

// Minimum over every monotone alignment path, enumerated explicitly.
double dtw_exhaustive(const std::vector<LatLon>& a, const std::vector<LatLon>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> go = [&](std::size_t i, std::size_t j, double acc) {
    acc += haversine_oracle(a[i], b[j]);
    if (acc >= best) return;
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = acc;
      return;
    }
    if (i + 1 < a.size() && j + 1 < b.size()) go(i + 1, j + 1, acc);
    if (i + 1 < a.size()) go(i + 1, j, acc);
    if (j + 1 < b.size()) go(i, j + 1, acc);
  };
  go(0, 0, 0.0);
  return best / static_cast<double>(b.size());
}

TEST(Ndtw, Examples) {
  auto g = line(6);
  auto t = make_task(g, "t", "n0", "n5");
  EXPECT_NEAR(ndtw(g, walk(g, t, ids(0, 5)), t), 0.0, 1e-12);

  std::vector<LatLon> ref, off;
  for (int i = 0; i < 3; ++i) {
    ref.push_back(offset_meters(kOrigin, 0, 20.0 * i));
    off.push_back(offset_meters(kOrigin, 20.0, 20.0 * i));
  }
  EXPECT_NEAR(ndtw(off, ref), 20.0, 1e-3);
  EXPECT_NEAR(ndtw(off, off), 0.0, 1e-12);
  EXPECT_THROW(ndtw({}, ref), std::invalid_argument);
}

TEST(Ndtw, MatchesExhaustiveAlignment) {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<LatLon> a(1 + rng.index(7)), b(1 + rng.index(7));
    for (auto& p : a) p = offset_meters(kOrigin, rng.uniform(-200, 200), rng.uniform(-200, 200));
    for (auto& p : b) p = offset_meters(kOrigin, rng.uniform(-200, 200), rng.uniform(-200, 200));
    const double want = dtw_exhaustive(a, b);
    ASSERT_NEAR(ndtw(a, b), want, 1e-9 * std::max(1.0, want)) << trial;
  }
}

// ---- invariants over engine output -------------------------------------------

TEST(MetricInvariants, HoldOverNoisyEpisodes) {
  auto city = city20();
  auto tasks = build_suite(city.graph, catalog(), 1, 7, "synth20", {});
  ASSERT_FALSE(tasks.empty());
  EpisodeConfig cfg;
  cfg.tcp_thresholds = {10, 40, 50, 60, 100, 500};
  int successes = 0;
  for (const auto& t : tasks) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      NoisyOraclePolicy p(0.3 * static_cast<double>(seed), seed);
      auto tr = run_episode(city.graph, t, p, parse_strategy_stack(seed % 2 ? "B1" : "none"), cfg);
      const auto m = compute_metrics(city.graph, tr, t);
      EXPECT_EQ(m, compute_metrics(city.graph, tr, t));
      for (std::size_t i = 1; i < m.tcp.size(); ++i) EXPECT_LE(m.tcp[i - 1].second, m.tcp[i].second);
      if (m.tce) {
        for (const auto& [d, ok] : m.tcp) EXPECT_TRUE(ok);
        EXPECT_TRUE(m.tcc);
      }
      EXPECT_GE(m.spl, 0.0);
      EXPECT_LE(m.spl, 1.0);
      const double l = path_length_m(city.graph, t.gt_path);
      const double walked = walked_length_m(city.graph, tr);
      const bool s = m.tcp_at(50);
      EXPECT_EQ(m.spl == 1.0, s && walked <= l + 1e-9);
      if (!s) {
        EXPECT_EQ(m.spl, 0.0);
      }
      EXPECT_EQ(m.steps, tr.moves());
      successes += m.tce;
    }
  }
  EXPECT_GT(successes, 0);
}

// ---- aggregation ----------------------------------------------------------------

EpisodeResult result(const std::string& id, InstructionCategory c, bool ok, double spd, int steps,
                     const std::string& city = "synth") {
  EpisodeResult r;
  r.task_id = id;
  r.city = city;
  r.category = c;
  r.termination = Termination::kStopped;
  r.metrics.tce = ok;
  r.metrics.tcp = {{40, ok}, {50, ok}, {60, true}};
  r.metrics.tcc = ok;
  r.metrics.spl = ok ? 0.8 : 0.0;
  r.metrics.spd = spd;
  r.metrics.ndtw = spd / 2;
  r.metrics.steps = steps;
  return r;
}

TEST(Aggregate, SingleEpisodeEqualsItsMetrics) {
  auto rows = aggregate({result("a", InstructionCategory::kTransitHub, true, 12.0, 9)}, GroupBy::kOverall);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].episodes, 1);
  EXPECT_EQ(rows[0].tce, 1.0);
  EXPECT_EQ(rows[0].tcp_at(50), 1.0);
  EXPECT_EQ(rows[0].spl, 0.8);
  EXPECT_EQ(rows[0].spd, 12.0);
  EXPECT_EQ(rows[0].ndtw, 6.0);
  EXPECT_EQ(rows[0].as, 9.0);
}

TEST(Aggregate, TwoGroupsAndOverall) {
  std::vector<EpisodeResult> rs{result("b", InstructionCategory::kLatentPoi, false, 100.0, 35, "x"),
                                result("a", InstructionCategory::kBasicPoi, true, 0.0, 7, "y")};
  auto cats = aggregate(rs, GroupBy::kCategory);
  ASSERT_EQ(cats.size(), 2u);
  EXPECT_EQ(cats[0].group, "Basic POI");
  EXPECT_EQ(cats[1].group, "Latent POI");
  auto all = aggregate(rs, GroupBy::kOverall);
  EXPECT_DOUBLE_EQ(all[0].tce, (cats[0].tce + cats[1].tce) / 2);
  EXPECT_DOUBLE_EQ(all[0].spd, 50.0);
  EXPECT_DOUBLE_EQ(all[0].as, 21.0);
  EXPECT_EQ(all[0].episodes, cats[0].episodes + cats[1].episodes);
  auto cities = aggregate(rs, GroupBy::kCity);
  EXPECT_EQ(cities[0].group, "x");
  EXPECT_EQ(cities[1].group, "y");
}

TEST(Aggregate, EmptyInput) {
  for (auto by : {GroupBy::kOverall, GroupBy::kCategory, GroupBy::kCity}) EXPECT_TRUE(aggregate({}, by).empty());
  EXPECT_EQ(reports_to_csv({}, {40, 50, 60}), "group_by,group,episodes,TCE,TCP-40m,TCP-50m,TCP-60m,TCC,SPL,SPD,nDTW,AS\n");
}

TEST(Aggregate, OrderIndependentAndCountsAddUp) {
  std::vector<EpisodeResult> rs;
  Rng rng(3);
  for (int i = 0; i < 60; ++i) {
    auto c = kAllInstructionCategories[rng.index(7)];
    rs.push_back(result("t" + std::to_string(i), c, rng.bernoulli(0.4), rng.uniform(0, 300), 1 + rng.index(35)));
  }
  auto a = aggregate(rs, GroupBy::kCategory);
  std::reverse(rs.begin(), rs.end());
  auto b = aggregate(rs, GroupBy::kCategory);
  ASSERT_EQ(a.size(), b.size());
  int total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].group, b[i].group);
    EXPECT_EQ(a[i].spd, b[i].spd);
    total += a[i].episodes;
  }
  EXPECT_EQ(total, 60);
}

TEST(Csv, ColumnsAndFormatting) {
  std::vector<EpisodeResult> rs{result("a", InstructionCategory::kBasicPoi, true, 3.14159, 7),
                                result("b", InstructionCategory::kBasicPoi, false, 0.0, 8)};
  const std::string csv = reports_to_csv(report_rows(rs, GroupBy::kCategory), {40, 50, 60});
  EXPECT_EQ(csv,
            "group_by,group,episodes,TCE,TCP-40m,TCP-50m,TCP-60m,TCC,SPL,SPD,nDTW,AS\n"
            "category,Basic POI,2,50.0,50.0,50.0,100.0,50.0,40.0,1.57,0.79,7.50\n"
            "category,Overall,2,50.0,50.0,50.0,100.0,50.0,40.0,1.57,0.79,7.50\n");
  auto j = reports_to_json(aggregate(rs, GroupBy::kOverall));
  for (const char* k : {"TCE", "TCP-40m", "TCP-50m", "TCP-60m", "TCC", "SPL", "SPD", "nDTW", "AS"})
    EXPECT_TRUE(j[0].contains(k)) << k;
  const std::string ep = episodes_to_csv(rs, {40, 50, 60});
  EXPECT_EQ(ep.substr(0, ep.find('\n')), "task_id,round,city,category,termination,TCE,TCP-40m,TCP-50m,TCP-60m,TCC,SPL,SPD,nDTW,steps");
}

TEST(Csv, QuotesFieldsWithCommas) {
  auto r = result("a,b", InstructionCategory::kBasicPoi, true, 1.0, 2, "New York, NY");
  const std::string csv = reports_to_csv(aggregate({r}, GroupBy::kCity), {50});
  EXPECT_NE(csv.find("\"New York, NY\""), std::string::npos);
}

}  // namespace
