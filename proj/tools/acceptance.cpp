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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances and seeds are pinned below; change them only with a ledger entry.

#include <chrono>
#include <climits>
#include <cstdio>
#include <deque>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "../tests/support.hpp"

namespace {

using namespace urbnav;
using namespace urbnav::testing;
namespace fs = std::filesystem;

constexpr double kSplTol = 1e-9;
constexpr double kDtwTol = 1e-9;
constexpr double kForwardTceMaxPct = 2.0;
constexpr double kB3MinGainPts = 5.0;
constexpr double kR3MinGainPts = 3.0;
constexpr double kOracleBudgetS = 10.0;
constexpr double kEfficacyBudgetS = 120.0;
constexpr int kEfficacyEpisodes = 200;
constexpr double kNoise = 0.3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("urbnav_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// The 20x20 city with a 50-task suite shared by several criteria.
const Bench& bench50() {
  static const Bench b = [] {
    Bench x{city20(), {}};
    auto all = build_suite(x.city.graph, catalog(), 3, 7, "synth20", HopBounds{5, 25});
    if (all.size() > 50) all.resize(50);
    x.tasks = std::move(all);
    return x;
  }();
  return b;
}

Outcome oracle_perfection() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& b = bench50();
  if (b.tasks.size() != 50) return {false, "suite has " + std::to_string(b.tasks.size()) + " tasks, need 50"};
  int tce = 0;
  double worst_spl = 0, worst_ndtw = 0, worst_spd = 0;
  for (const auto& t : b.tasks) {
    OraclePolicy p;
    const auto m = compute_metrics(b.city.graph, run_episode(b.city.graph, t, p, {}, {}), t);
    tce += m.tce;
    worst_spl = std::max(worst_spl, std::abs(m.spl - 1.0));
    worst_ndtw = std::max(worst_ndtw, m.ndtw);
    worst_spd = std::max(worst_spd, m.spd);
  }
  const double s = seconds_since(t0);
  const bool ok = tce == 50 && worst_spl <= kSplTol && worst_ndtw <= kSplTol && worst_spd <= kSplTol && s < kOracleBudgetS;
  return {ok, "TCE " + std::to_string(tce) + "/50, max|SPL-1| " + fmt("%.1e", worst_spl) + ", max nDTW " +
                  fmt("%.1e", worst_ndtw) + ", max SPD " + fmt("%.1e", worst_spd) + ", " + fmt("%.2fs", s) +
                  " (tol 1e-9, budget 10s)"};
}

Outcome baseline_sanity() {
  const auto& b = bench50();
  int early = 0, fwd_tce = 0;
  double fwd_as = 0, rnd_as = 0;
  for (std::size_t i = 0; i < b.tasks.size(); ++i) {
    const auto& t = b.tasks[i];
    ForwardPolicy f;
    RandomPolicy r(derive_seed(11, i));
    const auto tf = run_episode(b.city.graph, t, f, {}, {});
    const auto tr = run_episode(b.city.graph, t, r, {}, {});
    early += (tf.termination != Termination::kStepCap) + (tr.termination != Termination::kStepCap);
    const auto mf = compute_metrics(b.city.graph, tf, t);
    fwd_tce += mf.tce;
    fwd_as += mf.steps;
    rnd_as += compute_metrics(b.city.graph, tr, t).steps;
  }
  const double n = static_cast<double>(b.tasks.size());
  const double tce_pct = 100.0 * fwd_tce / n;
  const bool ok = early == 0 && fwd_as / n == 35.0 && rnd_as / n == 35.0 && tce_pct <= kForwardTceMaxPct;
  return {ok, "early stops " + std::to_string(early) + ", AS forward " + fmt("%.2f", fwd_as / n) + " random " +
                  fmt("%.2f", rnd_as / n) + ", forward TCE " + fmt("%.1f%%", tce_pct) + " (need AS 35, TCE <= 2%)"};
}

// Minimum over all monotone alignments, enumerated explicitly.
double dtw_exhaustive(const std::vector<LatLon>& a, const std::vector<LatLon>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> go = [&](std::size_t i, std::size_t j, double acc) {
    acc += geodesic_distance(a[i], b[j]);
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

Outcome metric_oracles() {
  Rng rng(31);
  int dtw_bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<LatLon> a(1 + rng.index(7)), b(1 + rng.index(7));
    for (auto& p : a) p = offset_meters(kOrigin, rng.uniform(-200, 200), rng.uniform(-200, 200));
    for (auto& p : b) p = offset_meters(kOrigin, rng.uniform(-200, 200), rng.uniform(-200, 200));
    const double want = dtw_exhaustive(a, b);
    dtw_bad += std::abs(ndtw(a, b) - want) > kDtwTol * std::max(1.0, want);
  }

  CitySpec s;
  s.layout = Layout::kIrregular;
  s.node_count = 400;
  s.jitter = 0.45;
  s.seed = 17;
  const NavGraph irr = generate_city(s).graph;
  int radius_bad = 0;
  const LatLon o = irr.node(0).pos;
  for (int q = 0; q < 1000; ++q) {
    const LatLon c = offset_meters(o, rng.uniform(-100, 500), rng.uniform(-100, 500));
    const double r = rng.uniform(0.5, 300.0);
    std::vector<NodeIndex> brute;
    for (NodeIndex i = 0; i < irr.node_count(); ++i) {
      if (geodesic_distance(c, irr.node(i).pos) <= r) brute.push_back(i);
    }
    radius_bad += irr.nodes_within_radius_idx(c, r) != brute;
  }

  const NavGraph& g = bench50().city.graph;
  std::vector<NodeId> walk{g.node(0).id};
  for (int i = 0; i < 150; ++i) {
    auto ts = g.out_targets(g.require(walk.back()));
    walk.push_back(g.node(ts[rng.index(ts.size())]).id);
  }
  MemoryStore m("t", 2);
  m.begin_round(1, walk.front(), 0.0);
  for (std::size_t i = 1; i < walk.size(); ++i) m.record_move(walk[i - 1], walk[i], 0, Direction::kForward, 0.0, false);
  m.end_round(false);
  m.begin_round(2, walk.front(), 0.0);
  const std::set<NodeId> visited(walk.begin(), walk.end());
  int r1_bad = 0, r2_bad = 0;
  for (int q = 0; q < 1000; ++q) {
    const NodeId v = g.node(rng.index(g.node_count())).id;
    const int h = 1 + static_cast<int>(rng.index(3));
    std::set<NodeId> want1{v};
    std::map<NodeId, int> d{{v, 0}};
    std::deque<NodeId> queue{v};
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      if (visited.contains(u)) want1.insert(u);
      if (d[u] == h) continue;
      for (const auto& e : g.out_edges(g.require(u))) {
        if (!d.contains(e.to)) {
          d[e.to] = d[u] + 1;
          queue.push_back(e.to);
        }
      }
    }
    r1_bad += r1_retrieve(m, g, v, h).node_ids() != want1;
    const double r = rng.uniform(5.0, 120.0);
    std::set<NodeId> want2{v};
    for (const auto& n : g.nodes()) {
      if (visited.contains(n.id) && geodesic_distance(n.pos, g.node(v).pos) <= r) want2.insert(n.id);
    }
    r2_bad += r2_retrieve(m, g, v, r).node_ids() != want2;
  }
  const bool ok = dtw_bad == 0 && radius_bad == 0 && r1_bad == 0 && r2_bad == 0;
  return {ok, "mismatches: nDTW " + std::to_string(dtw_bad) + "/500 (tol 1e-9), radius " + std::to_string(radius_bad) +
                  "/1000, R1 " + std::to_string(r1_bad) + "/1000, R2 " + std::to_string(r2_bad) + "/1000"};
}

Outcome backtracking_triggers() {
  constexpr int k = 3;
  constexpr double theta = 0.75;
  Rng rng(4);
  int bad = 0, fired1 = 0, fired2 = 0;
  for (int i = 0; i < 1000; ++i) {
    ConfidenceWindow cw(k, theta);
    DistanceWindow dw(k);
    std::vector<double> cs;
    std::vector<int> ds;
    const int n = static_cast<int>(rng.index(8));
    for (int j = 0; j < n; ++j) {
      cs.push_back(rng.index(5) == 0 ? theta : rng.uniform(0.3, 1.0));
      ds.push_back(static_cast<int>(rng.index(6)));
      cw.push(cs.back());
      dw.push(ds.back());
    }
    bool b1 = false;
    if (n >= k) {
      double sum = 0;
      for (int j = n - k; j < n; ++j) sum += cs[j];
      b1 = sum / k < theta;
    }
    bool b2 = n >= k + 1;
    for (int j = n - k; b2 && j < n; ++j) b2 = ds[j] > ds[j - 1];
    bad += (b1_should_backtrack(cw) != b1) + (b2_should_backtrack(dw) != b2);
    fired1 += b1;
    fired2 += b2;
  }
  return {bad == 0, "mismatches " + std::to_string(bad) + "/2000 (k=3, theta=0.75; B1 fired " +
                        std::to_string(fired1) + ", B2 fired " + std::to_string(fired2) + ")"};
}

Outcome b3_optimality() {
  std::vector<NavGraph> graphs;
  for (int r = 2; r <= 14; r += 3) graphs.push_back(grid(r, r));
  for (std::uint64_t seed : {3ULL, 8ULL, 21ULL}) {
    CitySpec s;
    s.layout = Layout::kIrregular;
    s.node_count = 200;
    s.seed = seed;
    s.poi_density = 0.0;
    graphs.push_back(generate_city(s).graph);
  }
  long checked = 0, bad = 0;
  for (const auto& g : graphs) {
    for (NodeIndex goal = 0; goal < g.node_count(); ++goal) {
      const auto dist = hop_distances_to(g, goal);
      for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (v == goal || dist[v] < 0 || g.out_edges(v).empty()) continue;
        int best = INT_MAX;
        NodeId lex_next;
        for (NodeIndex u : g.out_targets(v)) {
          if (dist[u] >= 0 && dist[u] < best) best = dist[u];
        }
        for (NodeIndex u : g.out_targets(v)) {
          if (dist[u] == best && (lex_next.empty() || g.node(u).id < lex_next)) lex_next = g.node(u).id;
        }
        double lex_az = 0;
        for (const auto& e : g.out_edges(v)) {
          if (e.to == lex_next) lex_az = e.azimuth;
        }
        for (double h : g.node(v).headings) {
          const auto views = perspectives(g, g.node(v).id, h);
          const int a = b3_hint(g, g.node(v).id, h, dist);
          // Expected: minimal next distance, then the largest cos to the
          // lexicographic shortest-path edge, then the lowest index.
          int want = -1;
          double want_phi = -2;
          for (const auto& p : views) {
            if (dist[g.require(p.target)] != best) continue;
            const double phi = std::cos(deg_to_rad(p.heading - lex_az));
            if (want < 0 || phi > want_phi) {
              want = p.index;
              want_phi = phi;
            }
          }
          ++checked;
          bad += a != want;
        }
      }
    }
  }
  return {bad == 0, "mismatches " + std::to_string(bad) + "/" + std::to_string(checked) + " (node, goal, heading) on " +
                        std::to_string(graphs.size()) + " graphs of <= 200 nodes"};
}

double tcp50_pct(const NavGraph& g, const std::vector<Task>& tasks, const StrategyStack& stack) {
  int ok = 0;
  for (int e = 0; e < kEfficacyEpisodes; ++e) {
    const Task& t = tasks[static_cast<std::size_t>(e) % tasks.size()];
    NoisyOraclePolicy p(kNoise, derive_seed(99, static_cast<std::uint64_t>(e)));
    ok += compute_metrics(g, run_episode(g, t, p, stack, {}), t).tcp_at(50.0);
  }
  return 100.0 * ok / kEfficacyEpisodes;
}

Outcome strategy_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  const City city = city20(42, 0.02);
  const auto tasks = build_suite(city.graph, catalog(), 4, 7, "synth20", HopBounds{15, 25});
  const double none = tcp50_pct(city.graph, tasks, {});
  const double b3 = tcp50_pct(city.graph, tasks, parse_strategy_stack("B3"));
  const double r3 = tcp50_pct(city.graph, tasks, parse_strategy_stack("R3"));
  const double s = seconds_since(t0);
  const bool ok = b3 - none >= kB3MinGainPts && r3 - none >= kR3MinGainPts && s < kEfficacyBudgetS;
  return {ok, "TCP(50) none " + fmt("%.1f", none) + ", B3 " + fmt("%.1f", b3) + " (" + fmt("%+.1f", b3 - none) +
                  ", need >= +5), R3 " + fmt("%.1f", r3) + " (" + fmt("%+.1f", r3 - none) + ", need >= +3), " +
                  std::to_string(kEfficacyEpisodes) + " episodes, " + std::to_string(tasks.size()) + " tasks, " +
                  fmt("%.1fs", s)};
}

Outcome construction_validity() {
  const City city = city20(5, 0.05);
  const auto cat = catalog();
  int made = 0, failed = 0;
  for (std::uint64_t seed = 0; made < 100 && seed < 10000; ++seed) {
    const auto& m = cat[seed % cat.size()];
    TaskOptions opts;
    opts.id = "v" + std::to_string(seed);
    auto t = generate_task(city.graph, m, m.instruction, derive_seed(2024, seed), opts);
    if (!t) continue;
    ++made;
    failed += !validate_task(city.graph, *t, HopBounds{5, 25}).passed();
  }
  return {made == 100 && failed == 0,
          std::to_string(made) + " tasks generated, " + std::to_string(failed) + " failed validation (bounds [5,25])"};
}

Outcome prompt_parse_contract() {
  Rng rng(2026);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const auto len = rng.index(120);
    for (std::size_t k = 0; k < len; ++k) s.push_back(static_cast<char>(rng.index(256)));
    const Phase phase = i % 2 ? Phase::kChoice : Phase::kStop;
    try {
      const Decision d = parse_decision(s, phase, 4);
      bad += !(d.fallback_used && d.action == 0);
    } catch (...) {
      ++bad;
    }
  }
  // The worked example as printed, including its missing comma after "thoughts".
  const std::string example = R"({
      "perspective observation": {
        "A": "A narrow side street with no shops or amenities nearby.",
        "B": "A broad avenue lined with numerous office buildings."
      },
      "thoughts": "The broad avenue (B) is more likely to have restaurants."
      "action":  "B",
      "score":   0.78
    })";
  const Decision d = parse_decision(example, Phase::kChoice, 3);
  const bool example_ok = d.action == 1 && std::abs(d.confidence - 0.78) < 1e-12 && !d.fallback_used;
  return {bad == 0 && example_ok, "fuzz violations " + std::to_string(bad) + "/10000, worked example -> (" +
                                      std::to_string(d.action) + ", " + fmt("%.2f", d.confidence) + ")"};
}

Outcome replay_determinism() {
  const auto& b = bench50();
  const auto in = scratch("inputs");
  save_graph(b.city.graph, in / "graph.json");
  save_tasks(b.tasks, in / "tasks.json");
  std::string csv[2];
  int replay_bad = 0;
  std::size_t n = 0;
  for (int run = 0; run < 2; ++run) {
    RunSpec s;
    s.graph = (in / "graph.json").string();
    s.tasks = (in / "tasks.json").string();
    s.policy.kind = PolicyKind::kNoisyOracle;
    s.policy.noise = kNoise;
    s.strategies = parse_strategy_stack("B1");
    s.seed = 77;
    s.parallelism = run == 0 ? 1 : 4;
    s.output = scratch("run" + std::to_string(run)).string();
    const auto a = run_suite(s);
    csv[run] = read_text_file(fs::path(s.output) / "metrics_overall.csv") +
               read_text_file(fs::path(s.output) / "episodes.csv");
    if (run == 1) {
      std::map<std::string, const Task*> by_id;
      for (const auto& t : b.tasks) by_id[t.id] = &t;
      for (std::size_t i = 0; i < a.episodes.size(); ++i) {
        const auto& t = a.trajectories[i];
        const auto log = fs::path(s.output) / "trajectories" / (detail::safe_file_stem(t.task_id) + ".r1.jsonl");
        replay_bad += !(replay(log, b.city.graph, *by_id.at(t.task_id)) == a.episodes[i].result.metrics);
        ++n;
      }
    }
  }
  const bool same = csv[0] == csv[1];
  return {same && replay_bad == 0, std::string("metric CSVs ") + (same ? "byte-identical" : "DIFFER") +
                                       ", replay mismatches " + std::to_string(replay_bad) + "/" + std::to_string(n)};
}

Outcome service_equivalence() {
  const auto& b = bench50();
  const NavGraph& g = b.city.graph;
  SessionManager m(g, b.tasks);
  httplib::Server server;
  mount_session_routes(server, m);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client c("127.0.0.1", port);

  int mismatch = 0, http_errors = 0;
  for (const auto& t : b.tasks) {
    OraclePolicy engine_policy;
    const auto want = metrics_to_json(compute_metrics(g, run_episode(g, t, engine_policy, {}, {}), t));
    auto r = c.Post("/sessions", json{{"task_id", t.id}}.dump(), "application/json");
    if (!r || r->status != 201) {
      ++http_errors;
      continue;
    }
    json st = json::parse(r->body);
    const std::string id = st["session_id"];
    OraclePolicy driver;
    for (int guard = 0; st["status"] == "active" && guard < 40; ++guard) {
      PolicyInput in;
      in.graph = &g;
      in.task = &t;
      in.node = st["node"];
      in.heading = st["heading"];
      in.step = st["steps"];
      in.perspectives = perspectives(g, in.node, in.heading);
      in.phase = Phase::kStop;
      if (driver.decide(in).action == kActionStop) {
        r = c.Post("/sessions/" + id + "/action", R"({"action":"stop"})", "application/json");
      } else {
        in.phase = Phase::kChoice;
        const int a = driver.decide(in).action;
        r = c.Post("/sessions/" + id + "/action", json{{"action", a}}.dump(), "application/json");
      }
      if (!r || r->status != 200) {
        ++http_errors;
        break;
      }
      st = json::parse(r->body);
    }
    r = c.Get("/sessions/" + id + "/report");
    if (!r || r->status != 200) {
      ++http_errors;
      continue;
    }
    mismatch += json::parse(r->body)["metrics"] != want;
  }

  // Step cap: 35 moves accepted, the 36th rejected.
  auto r = c.Post("/sessions", json{{"task_id", b.tasks.front().id}}.dump(), "application/json");
  const std::string id = json::parse(r->body)["session_id"];
  int accepted = 0;
  int rejected_status = 0;
  for (int i = 0; i < 36; ++i) {
    r = c.Post("/sessions/" + id + "/action", R"({"action":0})", "application/json");
    if (r && r->status == 200) {
      ++accepted;
    } else if (r) {
      rejected_status = r->status;
    }
  }
  const bool capped = accepted == 35 && rejected_status == 409 &&
                      json::parse(c.Get("/sessions/" + id + "/state")->body)["status"] == "capped";
  server.stop();
  th.join();
  return {mismatch == 0 && http_errors == 0 && capped,
          "metric mismatches " + std::to_string(mismatch) + "/" + std::to_string(b.tasks.size()) + ", HTTP errors " +
              std::to_string(http_errors) + ", cap: " + std::to_string(accepted) + " accepted then " +
              std::to_string(rejected_status)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle-perfection", oracle_perfection},
      {"baseline-sanity", baseline_sanity},
      {"metric-oracles", metric_oracles},
      {"backtracking-triggers", backtracking_triggers},
      {"b3-hint-optimality", b3_optimality},
      {"strategy-efficacy", strategy_efficacy},
      {"construction-validity", construction_validity},
      {"prompt-parse-contract", prompt_parse_contract},
      {"replay-determinism", replay_determinism},
      {"service-equivalence", service_equivalence},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
