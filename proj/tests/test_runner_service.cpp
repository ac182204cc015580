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

#include <regex>
#include <set>
#include <thread>

#include "support.hpp"

namespace {

using namespace urbnav;
using namespace urbnav::testing;
namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("urbnav_rs_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Inputs written once per process: the 20x20 city and a small suite.
struct Inputs {
  fs::path dir;
  NavGraph g;
  std::vector<Task> tasks;
};

const Inputs& inputs() {
  static const Inputs in = [] {
    Inputs x{fresh_dir("inputs"), city20().graph, {}};
    x.tasks = build_suite(x.g, catalog(), 1, 7, "synth20", HopBounds{5, 25});
    save_graph(x.g, x.dir / "graph.json");
    save_tasks(x.tasks, x.dir / "tasks.json");
    return x;
  }();
  return in;
}

RunSpec spec_for(const std::string& out, PolicyKind kind = PolicyKind::kOracle, double noise = 0.0) {
  RunSpec s;
  s.graph = (inputs().dir / "graph.json").string();
  s.tasks = (inputs().dir / "tasks.json").string();
  s.policy.kind = kind;
  s.policy.noise = noise;
  s.output = fresh_dir(out).string();
  s.seed = 5;
  return s;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

// Log text minus the wall-clock field, which is the only run-to-run difference.
std::string without_timing(const Trajectory& t) {
  static const std::regex wall(R"(,"wall_ms":[-0-9.e]+)");
  return std::regex_replace(trajectory_to_jsonl(t), wall, "");
}

TEST(RunSuite, OracleCompletesEveryTask) {
  auto a = run_suite(spec_for("oracle"));
  ASSERT_FALSE(a.episodes.empty());
  EXPECT_EQ(a.error_count(), 0);
  for (const auto& e : a.episodes) {
    EXPECT_TRUE(e.result.metrics.tce) << e.result.task_id;
    EXPECT_NEAR(e.result.metrics.spl, 1.0, 1e-9) << e.result.task_id;
  }
  const auto csv = slurp(fs::temp_directory_path() / "urbnav_rs_oracle" / "metrics_overall.csv");
  EXPECT_NE(csv.find("overall,Overall," + std::to_string(a.episodes.size()) + ",100.0"), std::string::npos) << csv;
}

TEST(RunSuite, ArtifactLayout) {
  auto s = spec_for("layout");
  auto a = run_suite(s);
  const fs::path out = s.output;
  for (const char* f : {"manifest.json", "episodes.json", "episodes.csv", "metrics_overall.csv", "metrics_overall.json",
                        "plot/scatter_steps_ndtw.csv", "plot/tcp_by_category.csv", "plot/tcp_by_city.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  std::size_t logs = 0;
  for (const auto& e : fs::directory_iterator(out / "trajectories")) logs += e.path().extension() == ".jsonl";
  EXPECT_EQ(logs, a.episodes.size());
  const json m = read_json_file(out / "manifest.json");
  EXPECT_EQ(m.at("run_id"), a.run_id);
  EXPECT_EQ(m.at("version"), kVersion);
  EXPECT_EQ(m.at("episodes").get<std::size_t>(), a.episodes.size());
  // scatter: header plus one line per episode
  const auto scatter = slurp(out / "plot" / "scatter_steps_ndtw.csv");
  EXPECT_EQ(std::count(scatter.begin(), scatter.end(), '\n'), static_cast<long>(a.episodes.size()) + 1);
  EXPECT_EQ(scatter.substr(0, scatter.find('\n')), "task_id,round,steps,nDTW");
}

TEST(RunSuite, DeterministicAcrossRunsAndParallelism) {
  auto s1 = spec_for("det1", PolicyKind::kNoisyOracle, 0.3);
  auto s2 = spec_for("det2", PolicyKind::kNoisyOracle, 0.3);
  s2.parallelism = 8;
  auto a1 = run_suite(s1);
  auto a2 = run_suite(s2);
  EXPECT_EQ(a1.run_id, a2.run_id);
  for (const char* f : {"episodes.csv", "metrics_overall.csv", "plot/scatter_steps_ndtw.csv"})
    EXPECT_EQ(slurp(fs::path(s1.output) / f), slurp(fs::path(s2.output) / f)) << f;
  ASSERT_EQ(a1.trajectories.size(), a2.trajectories.size());
  for (std::size_t i = 0; i < a1.trajectories.size(); ++i)
    EXPECT_TRUE(without_timing(a1.trajectories[i]) == without_timing(a2.trajectories[i])) << i;
}

TEST(RunSuite, SeedChangesNoisyRuns) {
  auto s1 = spec_for("seed1", PolicyKind::kNoisyOracle, 0.3);
  auto s2 = spec_for("seed2", PolicyKind::kNoisyOracle, 0.3);
  s2.seed = 6;
  auto a1 = run_suite(s1);
  auto a2 = run_suite(s2);
  EXPECT_NE(a1.run_id, a2.run_id);
  EXPECT_NE(slurp(fs::path(s1.output) / "episodes.csv"), slurp(fs::path(s2.output) / "episodes.csv"));
}

TEST(RunSuite, BrokenTaskIsolated) {
  const auto& in = inputs();
  auto tasks = in.tasks;
  Task bad = tasks.front();
  bad.id = "aaa-broken";
  bad.goal = "nowhere";
  bad.gt_path.back() = "nowhere";
  tasks.push_back(bad);
  RunSpec s = spec_for("broken");
  s.parallelism = 4;
  auto a = execute_suite(in.g, tasks, s);
  EXPECT_EQ(a.error_count(), 1);
  ASSERT_EQ(a.episodes.size(), tasks.size());
  const auto& first = a.episodes.front();  // sorted by id: "aaa-broken" first
  EXPECT_EQ(first.result.task_id, "aaa-broken");
  EXPECT_EQ(first.result.termination, Termination::kError);
  EXPECT_NE(first.error.find("nowhere"), std::string::npos);
  for (std::size_t i = 1; i < a.episodes.size(); ++i) EXPECT_TRUE(a.episodes[i].result.metrics.tce);
}

TEST(RunSuite, UnreachableGoalIsolated) {
  // two disconnected segments
  NavGraph g = planar({{"a", {0, 0}}, {"b", {0, 20}}, {"c", {0, 200}}, {"d", {0, 220}}}, {{"a", "b"}, {"c", "d"}});
  Task ok = make_task(g, "ok", "a", "b");
  Task far = make_task(g, "far", "a", "d");
  far.gt_path = {"a", "d"};
  RunSpec s;
  s.rounds = 2;
  auto a = execute_suite(g, {ok, far}, s);
  ASSERT_EQ(a.episodes.size(), 4u);
  EXPECT_EQ(a.error_count(), 2);
  EXPECT_EQ(a.episodes[0].result.task_id, "far");
  EXPECT_NE(a.episodes[0].error.find("unreachable"), std::string::npos);
  EXPECT_TRUE(a.episodes[2].result.metrics.tce);
  EXPECT_TRUE(a.episodes[3].result.metrics.tce);
}

TEST(RunSuite, ReportByCategory) {
  auto s = spec_for("bycat");
  auto a = run_suite(s);
  const auto csv = write_report(a, GroupBy::kCategory, s.output);
  std::set<std::string> cats;
  for (const auto& t : inputs().tasks) cats.insert(std::string(to_string(t.category)));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(cats.size()) + 2);
  for (const auto& c : cats) EXPECT_NE(csv.find("category," + c + ","), std::string::npos) << c;
  EXPECT_NE(csv.find("category,Overall,"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(s.output) / "metrics_category.json"));
}

TEST(RunSuite, MultiRoundReportsFinalRound) {
  auto s = spec_for("rounds", PolicyKind::kNoisyOracle, 0.3);
  s.rounds = 3;
  s.strategies = parse_strategy_stack("R3");
  auto a = run_suite(s);
  EXPECT_EQ(a.episodes.size(), 3 * inputs().tasks.size());
  EXPECT_EQ(a.final_results().size(), inputs().tasks.size());
  for (const auto& r : a.final_results()) EXPECT_EQ(r.round, 3);
}

TEST(RunSuite, LoadArtifactMatches) {
  auto s = spec_for("load", PolicyKind::kNoisyOracle, 0.2);
  auto a = run_suite(s);
  auto b = load_artifact(s.output);
  EXPECT_EQ(b.run_id, a.run_id);
  ASSERT_EQ(b.episodes.size(), a.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    EXPECT_EQ(b.episodes[i].result.task_id, a.episodes[i].result.task_id);
    EXPECT_EQ(b.episodes[i].result.metrics.tce, a.episodes[i].result.metrics.tce);
    EXPECT_NEAR(b.episodes[i].result.metrics.ndtw, a.episodes[i].result.metrics.ndtw, 1e-9);
  }
}

TEST(Replay, LogsReproduceMetrics) {
  auto s = spec_for("replay", PolicyKind::kNoisyOracle, 0.3);
  s.strategies = parse_strategy_stack("B1");
  auto a = run_suite(s);
  const auto& in = inputs();
  std::map<std::string, const Task*> by_id;
  for (const auto& t : in.tasks) by_id[t.id] = &t;
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    const auto& t = a.trajectories[i];
    const auto path = fs::path(s.output) / "trajectories" / (detail::safe_file_stem(t.task_id) + ".r1.jsonl");
    EXPECT_EQ(replay(path, in.g, *by_id.at(t.task_id)), a.episodes[i].result.metrics) << t.task_id;
  }
}

TEST(Replay, RejectsWrongTask) {
  auto s = spec_for("replay_wrong");
  auto a = run_suite(s);
  const auto& in = inputs();
  ASSERT_GE(in.tasks.size(), 2u);
  const Task* other = nullptr;
  for (const auto& t : in.tasks)
    if (t.id != a.trajectories[0].task_id) other = &t;
  EXPECT_THROW(replay(a.trajectories[0], in.g, *other), InputError);
}

TEST(RunSpecs, ValidateAndJson) {
  RunSpec s;
  s.graph = "/nonexistent/graph.json";
  s.tasks = "/nonexistent/tasks.json";
  EXPECT_THROW(validate(s), InputError);
  EXPECT_NO_THROW(validate(s, false));
  auto bad = s;
  bad.parallelism = 0;
  EXPECT_THROW(validate(bad, false), InputError);
  bad = s;
  bad.policy.noise = 1.5;
  EXPECT_THROW(validate(bad, false), InputError);
  bad = s;
  bad.tcp_thresholds.clear();
  EXPECT_THROW(validate(bad, false), InputError);

  s.rounds = 3;
  s.strategies = parse_strategy_stack("B3,C2,R3");
  s.policy.kind = PolicyKind::kNoisyOracle;
  s.policy.noise = 0.25;
  s.seed = 123;
  const json j = run_spec_to_json(s);
  EXPECT_EQ(run_spec_to_json(run_spec_from_json(j)), j);
  EXPECT_THROW(run_spec_from_json(json::array()), InputError);
  EXPECT_THROW(run_spec_from_json({{"rounds", "three"}}), InputError);
}

// --- sessions ---

struct SessionFixture {
  NavGraph g = grid(5, 5);
  Task corner = make_task(g, "corner", gid(0, 0), gid(4, 4));
  Task center = make_task(g, "center", gid(2, 2), gid(4, 2));
  Clock::time_point clock = Clock::time_point(std::chrono::seconds(1'800'000'000));
  SessionOptions opts() {
    SessionOptions o;
    o.now = [this] { return clock; };
    return o;
  }
};

TEST(Sessions, CreateAndList) {
  SessionFixture f;
  SessionManager m(f.g, {f.corner, f.center}, f.opts());
  const json tasks = m.list_tasks();
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0]["id"], "corner");
  EXPECT_FALSE(tasks[0].contains("goal"));
  const auto a = m.create("center");
  const auto b = m.create("center");
  EXPECT_NE(a, b);
  EXPECT_EQ(a.size(), 18u);
  EXPECT_EQ(m.size(), 2u);
  try {
    m.create("missing");
    FAIL();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.status(), 404);
  }
}

TEST(Sessions, StateHidesGroundTruth) {
  SessionFixture f;
  SessionManager m(f.g, {f.center}, f.opts());
  const json v = m.state(m.create("center"));
  EXPECT_EQ(v["status"], "active");
  EXPECT_EQ(v["node"], gid(2, 2));
  EXPECT_EQ(v["remaining"], 35);
  ASSERT_EQ(v["perspectives"].size(), 4u);
  EXPECT_EQ(v["perspectives"][0]["direction"], "FORWARD");
  const std::string text = v.dump();
  for (const char* k : {"goal", "gt_path", "distance", "satisfying"}) EXPECT_EQ(text.find(k), std::string::npos) << k;
  EXPECT_EQ(text.find(gid(4, 2)), std::string::npos);
}

TEST(Sessions, ActStopReport) {
  SessionFixture f;
  SessionManager m(f.g, {f.center}, f.opts());
  const auto id = m.create("center");
  json v = m.state(id);
  // walk north twice to the goal
  for (int i = 0; i < 2; ++i) {
    int north = -1;
    for (const auto& p : v["perspectives"]) {
      if (std::abs(signed_angle_diff(p["heading"].get<double>(), 0.0)) < 1.0) north = p["action"];
    }
    ASSERT_GE(north, 0);
    v = m.act(id, north);
  }
  EXPECT_EQ(v["node"], gid(4, 2));
  EXPECT_EQ(v["steps"], 2);
  try {
    m.report(id);
    FAIL();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.status(), 409);
  }
  try {
    m.act(id, 9);
    FAIL();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.status(), 400);
  }
  v = m.stop(id);
  EXPECT_EQ(v["status"], "stopped");
  EXPECT_EQ(v["summary"]["terminal"], gid(4, 2));
  EXPECT_FALSE(v.contains("perspectives"));
  const json r = m.report(id);
  EXPECT_TRUE(r["metrics"]["TCE"].get<bool>());
  EXPECT_EQ(r["trajectory"].size(), 5u);  // header, two moves, stop, footer
}

TEST(Sessions, StepCap) {
  SessionFixture f;
  SessionManager m(f.g, {f.corner}, f.opts());
  const auto id = m.create("corner");
  json v;
  for (int i = 0; i < 35; ++i) v = m.act(id, 0);
  EXPECT_EQ(v["status"], "capped");
  EXPECT_EQ(v["steps"], 35);
  try {
    m.act(id, 0);
    FAIL();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.status(), 409);
  }
  EXPECT_FALSE(m.report(id)["metrics"]["TCE"].get<bool>());
}

TEST(Sessions, IdleExpiry) {
  SessionFixture f;
  SessionManager m(f.g, {f.center}, f.opts());
  const auto old_id = m.create("center");
  f.clock += std::chrono::minutes(45);
  const auto new_id = m.create("center");
  m.act(new_id, 0);
  f.clock += std::chrono::minutes(20);
  EXPECT_EQ(m.expire_idle(), 1u);
  EXPECT_THROW(m.state(old_id), SessionError);
  EXPECT_NO_THROW(m.state(new_id));
}

TEST(Sessions, SnapshotResume) {
  SessionFixture f;
  auto dir = fresh_dir("snap");
  auto o = f.opts();
  o.snapshot_path = dir / "sessions.json";
  o.log_dir = dir / "logs";
  std::string live, done;
  json live_state;
  {
    SessionManager m(f.g, {f.corner, f.center}, o);
    live = m.create("corner");
    m.act(live, 0);
    live_state = m.act(live, 1);
    done = m.create("center");
    m.stop(done);
    m.save_snapshot();
  }
  EXPECT_TRUE(fs::exists(dir / "logs" / ("session-" + done + ".jsonl")));
  SessionManager m2(f.g, {f.corner, f.center}, o);
  EXPECT_EQ(m2.resume(), 2u);
  EXPECT_EQ(m2.state(live), live_state);
  EXPECT_EQ(m2.state(done)["status"], "stopped");
  // resumed sessions keep their idle clock
  f.clock += std::chrono::minutes(61);
  SessionManager m3(f.g, {f.corner, f.center}, o);
  EXPECT_EQ(m3.resume(), 2u);
  EXPECT_EQ(m3.size(), 0u);
}

TEST(Sessions, ConcurrentActions) {
  SessionFixture f;
  SessionManager m(f.g, {f.center}, f.opts());
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) ids.push_back(m.create("center"));
  std::vector<std::thread> pool;
  for (const auto& id : ids)
    pool.emplace_back([&m, id] {
      for (int k = 0; k < 10; ++k) m.act(id, 0);
    });
  for (auto& t : pool) t.join();
  for (const auto& id : ids) EXPECT_EQ(m.state(id)["steps"], 10);
}

// --- HTTP ---

class Service {
 public:
  Service(SessionManager& m) {
    mount_session_routes(server_, m, "http://console.test");
    port_ = server_.bind_to_any_port("127.0.0.1");
    th_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Service() {
    server_.stop();
    th_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread th_;
};

TEST(Http, SessionLifecycle) {
  SessionFixture f;
  SessionManager m(f.g, {f.center}, f.opts());
  Service svc(m);
  auto c = svc.client();

  auto r = c.Get("/tasks");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)[0]["id"], "center");
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "http://console.test");

  r = c.Post("/sessions", R"({"task_id":"center"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  const std::string id = json::parse(r->body)["session_id"];

  r = c.Get("/sessions/" + id + "/state");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["perspectives"].size(), 4u);

  r = c.Post("/sessions/" + id + "/action", R"({"action":0})", "application/json");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["steps"], 1);

  r = c.Get("/sessions/" + id + "/report");
  EXPECT_EQ(r->status, 409);
  EXPECT_TRUE(json::parse(r->body).contains("error"));

  r = c.Post("/sessions/" + id + "/action", R"({"action":"stop"})", "application/json");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["status"], "stopped");

  r = c.Post("/sessions/" + id + "/stop", "", "application/json");
  EXPECT_EQ(r->status, 409);

  r = c.Get("/sessions/" + id + "/report");
  EXPECT_EQ(r->status, 200);
  EXPECT_TRUE(json::parse(r->body).contains("metrics"));
}

TEST(Http, Errors) {
  SessionFixture f;
  SessionManager m(f.g, {f.center}, f.opts());
  Service svc(m);
  auto c = svc.client();
  auto r = c.Post("/sessions", R"({"task_id":"nope"})", "application/json");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
  r = c.Post("/sessions", "{not json", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Post("/sessions", "[1]", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Post("/sessions", "{}", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Get("/sessions/s-unknown/state");
  EXPECT_EQ(r->status, 404);
  r = c.Post("/sessions", R"({"task_id":"center"})", "application/json");
  const std::string id = json::parse(r->body)["session_id"];
  r = c.Post("/sessions/" + id + "/action", R"({"action":"left"})", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Post("/sessions/" + id + "/action", R"({"action":17})", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Options("/sessions");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Methods"), "GET, POST, OPTIONS");
}

}  // namespace
