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

// Batch runs over a task suite.
//
// Output directory layout:
//   manifest.json                run id, config hash, input hashes, wall time
//   episodes.json / episodes.csv one row per (task, round)
//   metrics_<group>.csv / .json  aggregated rows (final round only)
//   trajectories/<task>.r<k>.jsonl
//   plot/scatter_steps_ndtw.csv, plot/tcp_by_category.csv, plot/tcp_by_city.csv

#ifndef URBNAV_RUNNER_HPP
#define URBNAV_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "urbnav/episode.hpp"
#include "urbnav/metrics.hpp"
#include "urbnav/remote_policy.hpp"

namespace urbnav {

inline constexpr const char* kVersion = "1.0.0";

struct RunSpec {
  std::string graph;
  std::string tasks;
  std::string observations;  // optional observation table file
  PolicyConfig policy;
  StrategyStack strategies;
  int rounds = 1;
  int parallelism = 1;
  std::string output = "run";
  std::uint64_t seed = 0;
  int max_steps = 35;
  std::vector<double> tcp_thresholds{40.0, 50.0, 60.0};
  int retries = 2;
  int retry_backoff_ms = 250;
  int max_inflight = 4;
};

inline void validate(const RunSpec& s, bool check_files = true) {
  if (s.parallelism < 1) throw InputError("parallelism must be >= 1");
  if (s.rounds < 1) throw InputError("rounds must be >= 1");
  if (s.max_steps < 1) throw InputError("max_steps must be >= 1");
  if (s.tcp_thresholds.empty()) throw InputError("tcp_thresholds must not be empty");
  if (s.max_inflight < 1) throw InputError("max_inflight must be >= 1");
  try {
    validate(s.policy);
    validate(s.strategies);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (check_files) {
    for (const auto* f : {&s.graph, &s.tasks}) {
      if (f->empty() || !std::filesystem::exists(*f)) throw InputError("input file not found: '" + *f + "'");
    }
    if (!s.observations.empty() && !std::filesystem::exists(s.observations))
      throw InputError("observation file not found: '" + s.observations + "'");
  }
}

inline json run_spec_to_json(const RunSpec& s) {
  return {{"graph", s.graph},
          {"tasks", s.tasks},
          {"observations", s.observations},
          {"policy", policy_config_to_json(s.policy)},
          {"strategies", strategy_stack_to_json(s.strategies)},
          {"rounds", s.rounds},
          {"parallelism", s.parallelism},
          {"output", s.output},
          {"seed", s.seed},
          {"max_steps", s.max_steps},
          {"tcp_thresholds", s.tcp_thresholds},
          {"retries", s.retries},
          {"retry_backoff_ms", s.retry_backoff_ms},
          {"max_inflight", s.max_inflight}};
}

inline RunSpec run_spec_from_json(const json& j) {
  if (!j.is_object()) throw InputError("run spec must be a JSON object");
  RunSpec s;
  try {
    s.graph = j.value("graph", s.graph);
    s.tasks = j.value("tasks", s.tasks);
    s.observations = j.value("observations", s.observations);
    if (j.contains("policy")) s.policy = policy_config_from_json(j.at("policy"));
    if (j.contains("strategies")) s.strategies = strategy_stack_from_json(j.at("strategies"));
    s.rounds = j.value("rounds", s.rounds);
    s.parallelism = j.value("parallelism", s.parallelism);
    s.output = j.value("output", s.output);
    s.seed = j.value("seed", s.seed);
    s.max_steps = j.value("max_steps", s.max_steps);
    s.tcp_thresholds = j.value("tcp_thresholds", s.tcp_thresholds);
    s.retries = j.value("retries", s.retries);
    s.retry_backoff_ms = j.value("retry_backoff_ms", s.retry_backoff_ms);
    s.max_inflight = j.value("max_inflight", s.max_inflight);
  } catch (const json::exception& e) {
    throw InputError(std::string("run spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("run spec: ") + e.what());
  }
  return s;
}

struct EpisodeRecord {
  EpisodeResult result;
  std::string error;  // non-empty when the episode could not run normally
};

struct RunArtifact {
  std::string run_id;
  std::vector<EpisodeRecord> episodes;  // sorted by (task, round)
  std::vector<Trajectory> trajectories;  // same order; empty trajectory for setup errors
  json manifest;
  int final_round = 1;
  std::vector<double> tcp_thresholds{40.0, 50.0, 60.0};

  int error_count() const {
    int n = 0;
    for (const auto& e : episodes) n += (!e.error.empty() || e.result.termination == Termination::kError) ? 1 : 0;
    return n;
  }

  /// Results of the final round (what aggregate reports cover).
  std::vector<EpisodeResult> final_results() const {
    std::vector<EpisodeResult> out;
    for (const auto& e : episodes) {
      if (e.result.round == final_round) out.push_back(e.result);
    }
    return out;
  }
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string safe_file_stem(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out;
}

/// Error result for a task that cannot be run at all.
inline EpisodeRecord setup_error(const NavGraph& g, const Task& t, int round, const std::string& why,
                                 const std::vector<double>& thresholds) {
  EpisodeRecord r;
  auto sorted = thresholds;
  std::sort(sorted.begin(), sorted.end());
  for (double d : sorted) r.result.metrics.tcp.emplace_back(d, false);
  if (g.has_node(t.start) && g.has_node(t.goal))
    r.result.metrics.spd = geodesic_distance(g.node(t.start).pos, g.node(t.goal).pos);
  r.result.task_id = t.id;
  r.result.city = t.city;
  r.result.category = t.category;
  r.result.round = round;
  r.result.termination = Termination::kError;
  r.error = why;
  return r;
}

inline std::optional<std::string> task_problem(const NavGraph& g, const Task& t) {
  if (!g.has_node(t.start)) return "unknown start node '" + t.start + "'";
  if (!g.has_node(t.goal)) return "unknown goal node '" + t.goal + "'";
  if (t.gt_path.empty()) return std::string("empty ground-truth path");
  for (const auto& v : t.gt_path) {
    if (!g.has_node(v)) return "unknown path node '" + v + "'";
  }
  if (topo_distance(g, t.start, t.goal) == kUnreachable) return std::string("goal unreachable from start");
  try {
    path_length_m(g, t.gt_path);
  } catch (const GraphError& e) {
    return std::string("ground-truth path: ") + e.what();
  }
  return std::nullopt;
}

}  // namespace detail

/// Runs every task (all rounds) and returns the results. Writes nothing.
inline RunArtifact execute_suite(const NavGraph& g, const std::vector<Task>& tasks, const RunSpec& spec,
                                 const ObservationTable* observations = nullptr) {
  validate(spec, false);
  const auto t0 = std::chrono::steady_clock::now();
  auto limiter = std::make_shared<InflightLimiter>(spec.max_inflight);

  struct Slot {
    std::vector<EpisodeRecord> records;
    std::vector<Trajectory> trajectories;
  };
  std::vector<Slot> slots(tasks.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      Slot& slot = slots[i];
      if (auto problem = detail::task_problem(g, task)) {
        for (int r = 1; r <= spec.rounds; ++r) {
          slot.records.push_back(detail::setup_error(g, task, r, *problem, spec.tcp_thresholds));
          slot.trajectories.emplace_back();
        }
        continue;
      }
      try {
        EpisodeConfig cfg;
        cfg.max_steps = spec.max_steps;
        cfg.tcp_thresholds = spec.tcp_thresholds;
        cfg.retries = spec.retries;
        cfg.retry_backoff_ms = spec.retry_backoff_ms;
        const std::uint64_t task_seed = derive_seed(spec.seed ^ spec.policy.seed, fnv1a64(task.id));
        cfg.seed = task_seed;
        PolicyFactory factory = [&](int round) {
          return make_policy(spec.policy, derive_seed(task_seed, static_cast<std::uint64_t>(round)), limiter);
        };
        auto rounds = run_rounds(g, task, factory, spec.strategies, cfg, spec.rounds, observations);
        for (auto& tr : rounds.trajectories) {
          EpisodeRecord rec;
          rec.result.task_id = task.id;
          rec.result.city = task.city;
          rec.result.category = task.category;
          rec.result.round = tr.round;
          rec.result.termination = tr.termination;
          rec.result.metrics = compute_metrics(g, tr, task);
          rec.error = tr.error;
          slot.records.push_back(std::move(rec));
          slot.trajectories.push_back(std::move(tr));
        }
      } catch (const std::exception& e) {
        slot.records.clear();
        slot.trajectories.clear();
        for (int r = 1; r <= spec.rounds; ++r) {
          slot.records.push_back(detail::setup_error(g, task, r, e.what(), spec.tcp_thresholds));
          slot.trajectories.emplace_back();
        }
      }
    }
  };

  const int workers = std::min<int>(spec.parallelism, std::max<int>(1, static_cast<int>(tasks.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  RunArtifact a;
  a.final_round = spec.rounds;
  a.tcp_thresholds = spec.tcp_thresholds;
  std::vector<std::size_t> order(tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return tasks[x].id < tasks[y].id; });
  for (std::size_t i : order) {
    for (std::size_t k = 0; k < slots[i].records.size(); ++k) {
      a.episodes.push_back(std::move(slots[i].records[k]));
      a.trajectories.push_back(std::move(slots[i].trajectories[k]));
    }
  }

  json canon = run_spec_to_json(spec);
  canon.erase("output");
  canon.erase("parallelism");
  const std::uint64_t config_hash = fnv1a64(canon.dump());
  std::uint64_t tasks_hash = 0xcbf29ce484222325ULL;
  for (const auto& t : tasks) tasks_hash = fnv1a64(task_to_json(t).dump(), tasks_hash);
  const std::uint64_t graph_hash = fnv1a64(graph_to_json(g).dump());
  a.run_id = detail::hex64(fnv1a64(detail::hex64(config_hash) + detail::hex64(tasks_hash) + detail::hex64(graph_hash)));
  a.manifest = {{"run_id", a.run_id},
                {"version", kVersion},
                {"config_hash", detail::hex64(config_hash)},
                {"tasks_hash", detail::hex64(tasks_hash)},
                {"graph_hash", detail::hex64(graph_hash)},
                {"config", canon},
                {"episodes", a.episodes.size()},
                {"errors", a.error_count()},
                {"wall_time_s", detail::elapsed_ms(t0) / 1000.0}};
  return a;
}

inline json episode_record_to_json(const EpisodeRecord& e) {
  json j = metrics_to_json(e.result.metrics);
  j["task_id"] = e.result.task_id;
  j["city"] = e.result.city;
  j["category"] = std::string(to_string(e.result.category));
  j["round"] = e.result.round;
  j["termination"] = std::string(to_string(e.result.termination));
  j["error"] = e.error;
  return j;
}

inline EpisodeRecord episode_record_from_json(const json& j) {
  EpisodeRecord e;
  try {
    e.result.task_id = j.at("task_id").get<std::string>();
    e.result.city = j.at("city").get<std::string>();
    e.result.category = instruction_category_from_string(j.at("category").get<std::string>());
    e.result.round = j.at("round").get<int>();
    e.result.termination = detail::termination_from_string(j.at("termination").get<std::string>());
    e.error = j.value("error", std::string{});
    auto& m = e.result.metrics;
    m.tce = j.at("TCE").get<bool>();
    for (const auto& t : j.at("TCP")) m.tcp.emplace_back(t.at("threshold_m").get<double>(), t.at("success").get<bool>());
    m.tcc = j.at("TCC").get<bool>();
    m.spl = j.at("SPL").get<double>();
    m.spd = j.at("SPD").get<double>();
    m.ndtw = j.at("nDTW").get<double>();
    m.steps = j.at("steps").get<int>();
  } catch (const json::exception& e2) {
    throw InputError(std::string("episode record: ") + e2.what());
  } catch (const std::invalid_argument& e2) {
    throw InputError(std::string("episode record: ") + e2.what());
  }
  return e;
}

/// Writes metrics_<group>.csv and .json into `dir`. Returns the CSV text.
inline std::string write_report(const RunArtifact& a, GroupBy by, const std::filesystem::path& dir) {
  const auto rows = report_rows(a.final_results(), by);
  const std::string csv = reports_to_csv(rows, a.tcp_thresholds);
  const std::string stem = "metrics_" + std::string(to_string(by));
  write_text_file(dir / (stem + ".csv"), csv);
  write_text_file(dir / (stem + ".json"), reports_to_json(rows).dump(1) + "\n");
  return csv;
}

/// Scatter of (steps, nDTW) per episode plus TCP tables per category and city.
inline void emit_plot_data(const RunArtifact& a, const std::filesystem::path& dir) {
  std::string scatter = "task_id,round,steps,nDTW\n";
  for (const auto& e : a.episodes) {
    scatter += detail::csv_field(e.result.task_id) + "," + std::to_string(e.result.round) + "," +
               std::to_string(e.result.metrics.steps) + "," + format_fixed(e.result.metrics.ndtw, 4) + "\n";
  }
  write_text_file(dir / "scatter_steps_ndtw.csv", scatter);
  for (GroupBy by : {GroupBy::kCategory, GroupBy::kCity}) {
    std::string csv = "group";
    for (double d : a.tcp_thresholds) csv += "," + tcp_column(d);
    csv += "\n";
    for (const auto& r : aggregate(a.final_results(), by)) {
      csv += detail::csv_field(r.group);
      for (double d : a.tcp_thresholds) csv += "," + format_fixed(100.0 * r.tcp_at(d), 1);
      csv += "\n";
    }
    write_text_file(dir / ("tcp_by_" + std::string(to_string(by)) + ".csv"), csv);
  }
}

/// Persists an artifact (logs, episode tables, overall report, plot data).
inline void write_artifact(const RunArtifact& a, const std::filesystem::path& dir) {
  json eps = json::array();
  for (const auto& e : a.episodes) eps.push_back(episode_record_to_json(e));
  json doc = {{"final_round", a.final_round}, {"tcp_thresholds", a.tcp_thresholds}, {"episodes", eps}};
  write_text_file(dir / "episodes.json", doc.dump(1) + "\n");
  std::vector<EpisodeResult> all;
  for (const auto& e : a.episodes) all.push_back(e.result);
  write_text_file(dir / "episodes.csv", episodes_to_csv(all, a.tcp_thresholds));
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    const auto& t = a.trajectories[i];
    if (t.task_id.empty()) continue;
    write_trajectory_log(t, dir / "trajectories" /
                                (detail::safe_file_stem(t.task_id) + ".r" + std::to_string(t.round) + ".jsonl"));
  }
  write_report(a, GroupBy::kOverall, dir);
  emit_plot_data(a, dir / "plot");
  write_text_file(dir / "manifest.json", a.manifest.dump(1) + "\n");
}

/// Loads a persisted artifact's episode tables (trajectories are not loaded).
inline RunArtifact load_artifact(const std::filesystem::path& dir) {
  const json doc = read_json_file(dir / "episodes.json");
  RunArtifact a;
  try {
    a.final_round = doc.at("final_round").get<int>();
    a.tcp_thresholds = doc.at("tcp_thresholds").get<std::vector<double>>();
    for (const auto& e : doc.at("episodes")) a.episodes.push_back(episode_record_from_json(e));
  } catch (const json::exception& e) {
    throw InputError(std::string("episodes.json: ") + e.what());
  }
  if (std::filesystem::exists(dir / "manifest.json")) {
    a.manifest = read_json_file(dir / "manifest.json");
    a.run_id = a.manifest.value("run_id", std::string{});
  }
  return a;
}

/// Loads inputs, runs, and persists under spec.output.
inline RunArtifact run_suite(const RunSpec& spec) {
  validate(spec);
  const NavGraph g = load_graph(spec.graph);
  const auto tasks = load_tasks(spec.tasks);
  std::optional<ObservationTable> obs;
  if (!spec.observations.empty()) obs.emplace(observations_from_json(read_json_file(spec.observations)));
  RunArtifact a = execute_suite(g, tasks, spec, obs ? &*obs : nullptr);
  write_artifact(a, spec.output);
  return a;
}

/// Recomputes metrics from a trajectory log after structural checks.
inline EpisodeMetrics replay(const Trajectory& t, const NavGraph& g, const Task& task) {
  if (t.task_id != task.id) throw InputError("log is for task '" + t.task_id + "', not '" + task.id + "'");
  check_trajectory_structure(g, t);
  return compute_metrics(g, t, task);
}

inline EpisodeMetrics replay(const std::filesystem::path& log, const NavGraph& g, const Task& task) {
  return replay(read_trajectory_log(log), g, task);
}

}  // namespace urbnav

#endif  // URBNAV_RUNNER_HPP
