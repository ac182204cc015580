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

// urbnav command line.
//
// Exit codes: 0 success, 1 usage, 2 invalid input, 3 some episodes failed.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "urbnav/urbnav.hpp"

namespace {

using urbnav::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitPartial = 3;

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = urbnav::read_json_file(path);
  if (!j.is_object()) throw urbnav::InputError("config must be a JSON object");
  return j;
}

// Overrides `key` in `doc` when the flag was given on the command line.
template <typename T>
void overlay(json& doc, const CLI::Option* opt, const std::string& key, const T& value) {
  if (opt->count() > 0) doc[key] = value;
}

int cmd_synth(const std::string& config, const std::string& out_graph, const std::string& out_obs,
              const std::map<std::string, CLI::Option*>& opts, const json& flags) {
  json doc = load_config(config);
  for (const auto& [k, o] : opts) {
    if (o->count() > 0) doc[k] = flags.at(k);
  }
  const auto spec = urbnav::city_spec_from_json(doc);
  const auto city = urbnav::generate_city(spec);
  urbnav::save_graph(city.graph, out_graph);
  if (!out_obs.empty()) urbnav::write_text_file(out_obs, urbnav::observations_to_json(city.observations).dump(1) + "\n");
  std::cout << "nodes " << city.graph.node_count() << ", edges " << city.graph.edge_count() << ", pois "
            << city.graph.pois().size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urbnav: urban navigation benchmark toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic city graph and observation table");
  std::string synth_config, synth_graph = "graph.json", synth_obs;
  std::string s_city, s_layout;
  int s_rows = 0, s_cols = 0, s_nodes = 0;
  double s_spacing = 0, s_density = 0, s_jitter = 0;
  std::uint64_t s_seed = 0;
  synth->add_option("--config", synth_config, "CitySpec JSON file");
  synth->add_option("--out", synth_graph, "graph output path");
  synth->add_option("--observations", synth_obs, "observation table output path");
  std::map<std::string, CLI::Option*> synth_opts{
      {"city", synth->add_option("--city", s_city)},
      {"layout", synth->add_option("--layout", s_layout, "grid or irregular")},
      {"rows", synth->add_option("--rows", s_rows)},
      {"cols", synth->add_option("--cols", s_cols)},
      {"node_count", synth->add_option("--node_count", s_nodes)},
      {"spacing_m", synth->add_option("--spacing_m", s_spacing)},
      {"poi_density", synth->add_option("--poi_density", s_density)},
      {"jitter", synth->add_option("--jitter", s_jitter)},
      {"seed", synth->add_option("--seed", s_seed)}};

  // build
  auto* build = app.add_subcommand("build", "generate benchmark tasks from need mappings");
  std::string b_graph, b_catalog = "data/need_catalog.json", b_out = "tasks.json", b_city = "synth";
  int b_per = 4, b_min = 5, b_max = 25, b_attempts = 8;
  double b_radius = 100.0;
  std::uint64_t b_seed = 0;
  build->add_option("--graph", b_graph)->required();
  build->add_option("--catalog", b_catalog);
  build->add_option("--out", b_out);
  build->add_option("--city", b_city);
  build->add_option("--per_mapping", b_per);
  build->add_option("--min_hops", b_min);
  build->add_option("--max_hops", b_max);
  build->add_option("--min_radius_m", b_radius);
  build->add_option("--attempts", b_attempts);
  build->add_option("--seed", b_seed);

  // run
  auto* run = app.add_subcommand("run", "evaluate a policy on a task suite");
  std::string r_config, r_graph, r_tasks, r_obs, r_policy, r_strategies, r_output, r_endpoint, r_model, r_token_env;
  double r_noise = 0, r_timeout = 0, r_temperature = 0;
  int r_rounds = 0, r_par = 0, r_max_steps = 0, r_retries = 0, r_backoff = 0, r_inflight = 0;
  std::uint64_t r_seed = 0, r_policy_seed = 0;
  bool r_verbose = false;
  run->add_option("--config", r_config, "RunSpec JSON file; flags override its fields");
  auto* o_graph = run->add_option("--graph", r_graph);
  auto* o_tasks = run->add_option("--tasks", r_tasks);
  auto* o_obs = run->add_option("--observations", r_obs);
  auto* o_policy = run->add_option("--policy", r_policy, "random|forward|oracle|noisy_oracle|remote");
  auto* o_noise = run->add_option("--noise", r_noise);
  auto* o_policy_seed = run->add_option("--policy_seed", r_policy_seed);
  auto* o_endpoint = run->add_option("--endpoint", r_endpoint);
  auto* o_model = run->add_option("--model", r_model);
  auto* o_token_env = run->add_option("--token_env", r_token_env);
  auto* o_timeout = run->add_option("--timeout_s", r_timeout);
  auto* o_temperature = run->add_option("--temperature", r_temperature);
  auto* o_verbose = run->add_flag("--verbose", r_verbose);
  auto* o_strategies = run->add_option("--strategies", r_strategies, "e.g. B3,R3 or none");
  auto* o_rounds = run->add_option("--rounds", r_rounds);
  auto* o_par = run->add_option("--parallelism", r_par);
  auto* o_output = run->add_option("--output", r_output);
  auto* o_seed = run->add_option("--seed", r_seed);
  auto* o_max_steps = run->add_option("--max_steps", r_max_steps);
  auto* o_retries = run->add_option("--retries", r_retries);
  auto* o_backoff = run->add_option("--retry_backoff_ms", r_backoff);
  auto* o_inflight = run->add_option("--max_inflight", r_inflight);

  // report / plot-data
  auto* report = app.add_subcommand("report", "aggregate a finished run");
  std::string rep_dir, rep_group = "overall";
  report->add_option("--run", rep_dir)->required();
  report->add_option("--group_by,--group-by", rep_group, "overall|category|city");

  auto* plot = app.add_subcommand("plot-data", "emit plot-ready tables for a finished run");
  std::string plot_dir, plot_out;
  plot->add_option("--run", plot_dir)->required();
  plot->add_option("--out", plot_out, "defaults to <run>/plot");

  // replay
  auto* replay = app.add_subcommand("replay", "recompute metrics from a trajectory log");
  std::string rp_log, rp_graph, rp_tasks;
  replay->add_option("--log", rp_log)->required();
  replay->add_option("--graph", rp_graph)->required();
  replay->add_option("--tasks", rp_tasks)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "run the human session service");
  std::string sv_graph, sv_tasks, sv_obs, sv_host = "127.0.0.1", sv_snapshot, sv_logs, sv_cors = "*";
  int sv_port = 8080, sv_snapshot_s = 30;
  serve->add_option("--graph", sv_graph)->required();
  serve->add_option("--tasks", sv_tasks)->required();
  serve->add_option("--observations", sv_obs);
  serve->add_option("--host", sv_host);
  serve->add_option("--port", sv_port);
  serve->add_option("--snapshot", sv_snapshot, "session snapshot file");
  serve->add_option("--snapshot_every_s", sv_snapshot_s);
  serve->add_option("--log_dir", sv_logs);
  serve->add_option("--cors_origin", sv_cors);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) {
      json flags = {{"city", s_city}, {"layout", s_layout}, {"rows", s_rows},           {"cols", s_cols},
                    {"node_count", s_nodes}, {"spacing_m", s_spacing}, {"poi_density", s_density},
                    {"jitter", s_jitter}, {"seed", s_seed}};
      return cmd_synth(synth_config, synth_graph, synth_obs, synth_opts, flags);
    }

    if (*build) {
      const auto g = urbnav::load_graph(b_graph);
      const auto catalog = urbnav::load_need_catalog(b_catalog);
      const auto tasks = urbnav::build_suite(g, catalog, b_per, b_seed, b_city, urbnav::HopBounds{b_min, b_max},
                                             b_radius, b_attempts);
      urbnav::save_tasks(tasks, b_out);
      std::cout << tasks.size() << " tasks written to " << b_out << "\n";
      return kExitOk;
    }

    if (*run) {
      json doc = load_config(r_config);
      overlay(doc, o_graph, "graph", r_graph);
      overlay(doc, o_tasks, "tasks", r_tasks);
      overlay(doc, o_obs, "observations", r_obs);
      overlay(doc, o_strategies, "strategies", r_strategies);
      overlay(doc, o_rounds, "rounds", r_rounds);
      overlay(doc, o_par, "parallelism", r_par);
      overlay(doc, o_output, "output", r_output);
      overlay(doc, o_seed, "seed", r_seed);
      overlay(doc, o_max_steps, "max_steps", r_max_steps);
      overlay(doc, o_retries, "retries", r_retries);
      overlay(doc, o_backoff, "retry_backoff_ms", r_backoff);
      overlay(doc, o_inflight, "max_inflight", r_inflight);
      json& pol = doc["policy"];
      if (!pol.is_object()) pol = json::object();
      overlay(pol, o_policy, "kind", r_policy);
      overlay(pol, o_noise, "noise", r_noise);
      overlay(pol, o_policy_seed, "seed", r_policy_seed);
      json& rem = pol["remote"];
      if (!rem.is_object()) rem = json::object();
      overlay(rem, o_endpoint, "endpoint", r_endpoint);
      overlay(rem, o_model, "model", r_model);
      overlay(rem, o_token_env, "token_env", r_token_env);
      overlay(rem, o_timeout, "timeout_s", r_timeout);
      overlay(rem, o_temperature, "temperature", r_temperature);
      overlay(rem, o_verbose, "verbose", r_verbose);

      const auto spec = urbnav::run_spec_from_json(doc);
      const auto artifact = urbnav::run_suite(spec);
      std::cout << urbnav::reports_to_csv(urbnav::report_rows(artifact.final_results(), urbnav::GroupBy::kOverall),
                                          artifact.tcp_thresholds);
      std::cout << "run " << artifact.run_id << ": " << artifact.episodes.size() << " episodes, "
                << artifact.error_count() << " errors, output in " << spec.output << "\n";
      for (const auto& e : artifact.episodes) {
        if (!e.error.empty()) std::cerr << "episode " << e.result.task_id << " r" << e.result.round << ": " << e.error << "\n";
      }
      return artifact.error_count() > 0 ? kExitPartial : kExitOk;
    }

    if (*report) {
      const auto a = urbnav::load_artifact(rep_dir);
      std::cout << urbnav::write_report(a, urbnav::group_by_from_string(rep_group), rep_dir);
      return kExitOk;
    }

    if (*plot) {
      const auto a = urbnav::load_artifact(plot_dir);
      const std::filesystem::path out = plot_out.empty() ? std::filesystem::path(plot_dir) / "plot" : std::filesystem::path(plot_out);
      urbnav::emit_plot_data(a, out);
      std::cout << "plot data written to " << out.string() << "\n";
      return kExitOk;
    }

    if (*replay) {
      const auto g = urbnav::load_graph(rp_graph);
      const auto tasks = urbnav::load_tasks(rp_tasks);
      const auto t = urbnav::read_trajectory_log(rp_log);
      auto it = std::find_if(tasks.begin(), tasks.end(), [&](const urbnav::Task& x) { return x.id == t.task_id; });
      if (it == tasks.end()) throw urbnav::InputError("task '" + t.task_id + "' not in " + rp_tasks);
      std::cout << urbnav::metrics_to_json(urbnav::replay(t, g, *it)).dump(1) << "\n";
      return kExitOk;
    }

    if (*serve) {
      const auto g = urbnav::load_graph(sv_graph);
      auto tasks = urbnav::load_tasks(sv_tasks);
      std::optional<urbnav::ObservationTable> obs;
      if (!sv_obs.empty()) obs.emplace(urbnav::observations_from_json(urbnav::read_json_file(sv_obs)));
      urbnav::SessionOptions opts;
      opts.snapshot_path = sv_snapshot;
      opts.log_dir = sv_logs;
      urbnav::SessionManager manager(g, std::move(tasks), opts, obs ? &*obs : nullptr);
      const auto restored = manager.resume();
      httplib::Server server;
      urbnav::mount_session_routes(server, manager, sv_cors);
      urbnav::SnapshotLoop loop(manager, std::chrono::seconds(std::max(1, sv_snapshot_s)));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving on http://" << sv_host << ":" << sv_port << " (" << restored << " sessions restored)"
                << std::endl;
      if (!server.listen(sv_host, sv_port)) {
        std::cerr << "error: cannot bind " << sv_host << ":" << sv_port << "\n";
        return kExitInput;
      }
      return kExitOk;
    }
  } catch (const urbnav::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const urbnav::GraphError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
