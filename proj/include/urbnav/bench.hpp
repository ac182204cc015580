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

// Demand-driven task construction: need -> POI predicate, satisfying-node
// query, constrained start selection, route generation and validation.

#ifndef URBNAV_BENCH_HPP
#define URBNAV_BENCH_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "urbnav/graph_io.hpp"
#include "urbnav/rng.hpp"
#include "urbnav/routing.hpp"

namespace urbnav {

enum class InstructionCategory {
  kBasicPoi,
  kBrandSpecific,
  kTransitHub,
  kLatentPoi,
  kAbstractDemand,
  kInclusiveInfrastructure,
  kSemanticPreference,
};

inline constexpr std::array<InstructionCategory, 7> kAllInstructionCategories = {
    InstructionCategory::kBasicPoi,        InstructionCategory::kBrandSpecific,
    InstructionCategory::kTransitHub,      InstructionCategory::kLatentPoi,
    InstructionCategory::kAbstractDemand,  InstructionCategory::kInclusiveInfrastructure,
    InstructionCategory::kSemanticPreference};

inline std::string_view to_string(InstructionCategory c) {
  switch (c) {
    case InstructionCategory::kBasicPoi: return "Basic POI";
    case InstructionCategory::kBrandSpecific: return "Brand-Specific";
    case InstructionCategory::kTransitHub: return "Transit Hub";
    case InstructionCategory::kLatentPoi: return "Latent POI";
    case InstructionCategory::kAbstractDemand: return "Abstract Demand";
    case InstructionCategory::kInclusiveInfrastructure: return "Inclusive Infrastructure";
    case InstructionCategory::kSemanticPreference: return "Semantic Preference";
  }
  return "Basic POI";
}

inline InstructionCategory instruction_category_from_string(std::string_view s) {
  for (auto c : kAllInstructionCategories) {
    if (to_string(c) == s) return c;
  }
  throw InputError("unknown instruction category '" + std::string(s) + "'");
}

struct NeedMapping {
  InstructionCategory category = InstructionCategory::kBasicPoi;
  std::string instruction;
  std::vector<std::string> categories;
  std::vector<std::string> keywords;
  std::vector<std::string> descriptors;

  bool empty() const { return categories.empty() && keywords.empty() && descriptors.empty(); }
};

struct Task {
  std::string id;
  std::string city;
  std::string instruction;
  InstructionCategory category = InstructionCategory::kBasicPoi;
  NeedMapping mapping;
  NodeId start;
  NodeId goal;
  std::vector<NodeId> satisfying_nodes;
  std::vector<NodeId> gt_path;
  double min_radius_m = 100.0;
};

struct HopBounds {
  int min = 5;
  int max = 25;
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

/// True iff `p` satisfies the mapping: category match (case-insensitive
/// substring in either direction), a keyword inside the lowercased name, or a
/// descriptor present on the POI (case-insensitive equality).
inline bool poi_satisfies(const Poi& p, const NeedMapping& m) {
  const std::string cat = to_lower(p.category);
  for (const auto& c : m.categories) {
    if (c.empty()) continue;
    const std::string lc = to_lower(c);
    if (cat.find(lc) != std::string::npos || lc.find(cat) != std::string::npos) return true;
  }
  const std::string name = to_lower(p.name);
  for (const auto& k : m.keywords) {
    if (!k.empty() && name.find(to_lower(k)) != std::string::npos) return true;
  }
  for (const auto& d : m.descriptors) {
    if (d.empty()) continue;
    const std::string ld = to_lower(d);
    for (const auto& pd : p.descriptors) {
      if (to_lower(pd) == ld) return true;
    }
  }
  return false;
}

inline bool node_satisfies(const NavGraph& g, NodeIndex v, const NeedMapping& m) {
  for (std::size_t p : g.visible_poi_indices(v)) {
    if (poi_satisfies(g.poi(p), m)) return true;
  }
  return false;
}

/// Nodes with at least one visible POI satisfying `m`, in graph order.
inline std::vector<NodeId> query_satisfying_nodes(const NavGraph& g, const NeedMapping& m) {
  std::vector<NodeId> out;
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    if (node_satisfies(g, v, m)) out.push_back(g.node(v).id);
  }
  return out;
}

namespace detail {

/// Shared state for start selection over one (graph, mapping) pair.
struct SatisfyingIndex {
  std::vector<NodeIndex> nodes;
  std::vector<std::vector<int>> dist_to;  // dist_to[k][v] = hops v -> nodes[k]

  SatisfyingIndex(const NavGraph& g, const NeedMapping& m) {
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      if (node_satisfies(g, v, m)) nodes.push_back(v);
    }
    for (NodeIndex s : nodes) dist_to.push_back(hop_distances_to(g, s));
  }

  std::optional<std::size_t> slot(NodeIndex v) const {
    auto it = std::find(nodes.begin(), nodes.end(), v);
    if (it == nodes.end()) return std::nullopt;
    return static_cast<std::size_t>(it - nodes.begin());
  }

  /// Nearest satisfying node from `v` by hops, ties by node id.
  std::optional<NodeIndex> nearest(const NavGraph& g, NodeIndex v) const {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const int d = dist_to[k][v];
      if (d == kUnreachable) continue;
      if (!best) {
        best = k;
        continue;
      }
      const int bd = dist_to[*best][v];
      if (d < bd || (d == bd && g.node(nodes[k]).id < g.node(nodes[*best]).id)) best = k;
    }
    if (!best) return std::nullopt;
    return nodes[*best];
  }
};

inline std::vector<NodeIndex> start_candidates(const NavGraph& g, const SatisfyingIndex& sat, std::size_t goal_slot,
                                               double min_radius_m, HopBounds bounds) {
  std::vector<NodeIndex> out;
  const auto& to_goal = sat.dist_to[goal_slot];
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    const int d = to_goal[v];
    if (d == kUnreachable || d < bounds.min || d > bounds.max) continue;
    bool crowded = false;
    for (std::size_t k = 0; k < sat.nodes.size() && !crowded; ++k) {
      if (geodesic_distance(g.node(v).pos, g.node(sat.nodes[k]).pos) > min_radius_m) continue;
      const int dk = sat.dist_to[k][v];
      if (dk != kUnreachable && dk < bounds.min) crowded = true;
    }
    if (!crowded) out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Picks a start node for `goal`. Returns nullopt when no node qualifies.
inline std::optional<NodeId> select_start(const NavGraph& g, const NodeId& goal, const NeedMapping& m,
                                          double min_radius_m, HopBounds bounds, std::uint64_t seed) {
  detail::SatisfyingIndex sat(g, m);
  auto slot = sat.slot(g.require(goal));
  if (!slot) return std::nullopt;
  auto cands = detail::start_candidates(g, sat, *slot, min_radius_m, bounds);
  if (cands.empty()) return std::nullopt;
  Rng rng(seed);
  return g.node(cands[rng.index(cands.size())]).id;
}

struct TaskOptions {
  std::string id = "task";
  std::string city = "city";
  HopBounds bounds{};
  double min_radius_m = 100.0;
  std::optional<NodeId> goal;  // fix the goal instead of sampling one
};

/// Generates one task, or nullopt if the mapping admits none. The goal is the
/// satisfying node nearest to the start by hops (ties by node id), and the
/// ground-truth path is the lexicographically-first hop-shortest path.
inline std::optional<Task> generate_task(const NavGraph& g, const NeedMapping& m, const std::string& instruction,
                                         std::uint64_t seed, const TaskOptions& opts = {}) {
  detail::SatisfyingIndex sat(g, m);
  if (sat.nodes.empty()) return std::nullopt;
  Rng rng(seed);

  std::vector<std::size_t> order;
  if (opts.goal) {
    auto idx = g.index_of(*opts.goal);
    if (!idx) return std::nullopt;
    auto slot = sat.slot(*idx);
    if (!slot) return std::nullopt;
    order.push_back(*slot);
  } else {
    for (std::size_t k = 0; k < sat.nodes.size(); ++k) order.push_back(k);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  }

  std::vector<bool> satisfying(g.node_count(), false);
  for (NodeIndex s : sat.nodes) satisfying[s] = true;

  for (std::size_t slot : order) {
    const NodeIndex goal = sat.nodes[slot];
    std::vector<NodeIndex> starts;
    for (NodeIndex v : detail::start_candidates(g, sat, slot, opts.min_radius_m, opts.bounds)) {
      if (sat.nearest(g, v) == goal) starts.push_back(v);
    }
    while (!starts.empty()) {
      const std::size_t pick = rng.index(starts.size());
      const NodeIndex start = starts[pick];
      auto path = lexicographic_shortest_path(g, start, goal, sat.dist_to[slot]);
      const bool clean =
          path && std::none_of(path->begin() + 1, path->end() - 1, [&](NodeIndex v) { return satisfying[v]; });
      if (!clean) {
        starts.erase(starts.begin() + static_cast<std::ptrdiff_t>(pick));
        continue;
      }
      Task t;
      t.id = opts.id;
      t.city = opts.city;
      t.instruction = instruction;
      t.category = m.category;
      t.mapping = m;
      t.start = g.node(start).id;
      t.goal = g.node(goal).id;
      for (NodeIndex s : sat.nodes) t.satisfying_nodes.push_back(g.node(s).id);
      for (NodeIndex v : *path) t.gt_path.push_back(g.node(v).id);
      t.min_radius_m = opts.min_radius_m;
      return t;
    }
  }
  return std::nullopt;
}

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::string task_id;
  std::vector<ValidationCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.pass; });
  }
  const ValidationCheck* find(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

inline ValidationReport validate_task(const NavGraph& g, const Task& t, HopBounds bounds = {}) {
  ValidationReport r;
  r.task_id = t.id;

  const bool endpoints_known = g.has_node(t.start) && g.has_node(t.goal);
  const int hops = endpoints_known ? topo_distance(g, t.start, t.goal) : kUnreachable;
  r.checks.push_back({"endpoints-connected", hops != kUnreachable,
                      !endpoints_known ? "start or goal missing from graph"
                                       : (hops == kUnreachable ? "goal unreachable from start" : "")});

  bool shortest = !t.gt_path.empty() && t.gt_path.front() == t.start && t.gt_path.back() == t.goal;
  std::string why = shortest ? "" : "path endpoints do not match start/goal";
  for (std::size_t i = 1; shortest && i < t.gt_path.size(); ++i) {
    if (!g.find_edge(t.gt_path[i - 1], t.gt_path[i])) {
      shortest = false;
      why = "no edge " + t.gt_path[i - 1] + "->" + t.gt_path[i];
    }
  }
  const int path_hops = t.gt_path.empty() ? -1 : static_cast<int>(t.gt_path.size()) - 1;
  if (shortest && path_hops != hops) {
    shortest = false;
    why = "path has " + std::to_string(path_hops) + " hops, shortest is " + std::to_string(hops);
  }
  r.checks.push_back({"path-is-shortest", shortest, why});

  const bool len_ok = path_hops >= bounds.min && path_hops <= bounds.max;
  r.checks.push_back({"length-in-[" + std::to_string(bounds.min) + "," + std::to_string(bounds.max) + "]", len_ok,
                      len_ok ? "" : std::to_string(path_hops) + " hops outside [" + std::to_string(bounds.min) + "," +
                                        std::to_string(bounds.max) + "]"});

  const auto goal_idx = g.index_of(t.goal);
  const bool goal_ok = goal_idx && node_satisfies(g, *goal_idx, t.mapping);
  r.checks.push_back({"goal-satisfies", goal_ok, goal_ok ? "" : "no visible POI at goal satisfies the mapping"});

  bool clean = true;
  std::string dirty;
  for (std::size_t i = 1; i + 1 < t.gt_path.size(); ++i) {
    auto v = g.index_of(t.gt_path[i]);
    if (v && node_satisfies(g, *v, t.mapping)) {
      clean = false;
      dirty = "interior node " + t.gt_path[i] + " already satisfies the need";
      break;
    }
  }
  r.checks.push_back({"interior-clean", clean, dirty});
  return r;
}

// ---------------------------------------------------------------------------
// Serialization.

inline json mapping_to_json(const NeedMapping& m) {
  return {{"category", std::string(to_string(m.category))},
          {"instruction", m.instruction},
          {"categories", m.categories},
          {"keywords", m.keywords},
          {"descriptors", m.descriptors}};
}

inline NeedMapping mapping_from_json(const json& j) {
  NeedMapping m;
  try {
    if (j.contains("category")) m.category = instruction_category_from_string(j.at("category").get<std::string>());
    m.instruction = j.value("instruction", std::string{});
    m.categories = j.value("categories", std::vector<std::string>{});
    m.keywords = j.value("keywords", std::vector<std::string>{});
    m.descriptors = j.value("descriptors", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw InputError(std::string("need mapping: ") + e.what());
  }
  if (m.empty()) throw InputError("need mapping '" + m.instruction + "' matches nothing");
  return m;
}

inline std::vector<NeedMapping> load_need_catalog(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_array()) throw InputError("need catalog must be a JSON array");
  std::vector<NeedMapping> out;
  for (const auto& j : doc) out.push_back(mapping_from_json(j));
  return out;
}

inline json task_to_json(const Task& t) {
  return {{"id", t.id},
          {"city", t.city},
          {"instruction", t.instruction},
          {"category", std::string(to_string(t.category))},
          {"mapping",
           {{"categories", t.mapping.categories},
            {"keywords", t.mapping.keywords},
            {"descriptors", t.mapping.descriptors}}},
          {"start", t.start},
          {"goal", t.goal},
          {"satisfying_nodes", t.satisfying_nodes},
          {"gt_path", t.gt_path},
          {"min_radius_m", t.min_radius_m}};
}

inline Task task_from_json(const json& j) {
  Task t;
  try {
    t.id = j.at("id").get<std::string>();
    t.city = j.value("city", std::string{});
    t.instruction = j.at("instruction").get<std::string>();
    t.category = instruction_category_from_string(j.at("category").get<std::string>());
    const auto& m = j.at("mapping");
    t.mapping.category = t.category;
    t.mapping.instruction = t.instruction;
    t.mapping.categories = m.value("categories", std::vector<std::string>{});
    t.mapping.keywords = m.value("keywords", std::vector<std::string>{});
    t.mapping.descriptors = m.value("descriptors", std::vector<std::string>{});
    t.start = j.at("start").get<std::string>();
    t.goal = j.at("goal").get<std::string>();
    t.satisfying_nodes = j.value("satisfying_nodes", std::vector<std::string>{});
    t.gt_path = j.at("gt_path").get<std::vector<std::string>>();
    t.min_radius_m = j.value("min_radius_m", 100.0);
  } catch (const json::exception& e) {
    throw InputError(std::string("task: ") + e.what());
  }
  return t;
}

inline json tasks_to_json(const std::vector<Task>& tasks) {
  json doc;
  doc["tasks"] = json::array();
  for (const auto& t : tasks) doc["tasks"].push_back(task_to_json(t));
  return doc;
}

inline std::vector<Task> load_tasks(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object() || !doc.contains("tasks") || !doc.at("tasks").is_array())
    throw InputError("task file must be an object with a 'tasks' array");
  std::vector<Task> out;
  for (const auto& j : doc.at("tasks")) out.push_back(task_from_json(j));
  return out;
}

inline void save_tasks(const std::vector<Task>& tasks, const std::filesystem::path& path) {
  write_text_file(path, tasks_to_json(tasks).dump(1) + "\n");
}

/// Generates up to `per_mapping` distinct tasks for every mapping. Seeds are
/// drawn deterministically from `seed`; duplicate (start, goal) pairs are skipped.
inline std::vector<Task> build_suite(const NavGraph& g, const std::vector<NeedMapping>& catalog, int per_mapping,
                                     std::uint64_t seed, const std::string& city, HopBounds bounds = {},
                                     double min_radius_m = 100.0, int attempts_per_task = 8) {
  std::vector<Task> out;
  std::set<std::pair<NodeId, NodeId>> used;
  for (std::size_t mi = 0; mi < catalog.size(); ++mi) {
    int made = 0;
    for (int attempt = 0; made < per_mapping && attempt < per_mapping * attempts_per_task; ++attempt) {
      const std::uint64_t s = derive_seed(seed, mi * 100003ULL + static_cast<std::uint64_t>(attempt));
      TaskOptions opts;
      opts.city = city;
      opts.bounds = bounds;
      opts.min_radius_m = min_radius_m;
      opts.id = city + "-m" + std::to_string(mi) + "-" + std::to_string(made);
      auto t = generate_task(g, catalog[mi], catalog[mi].instruction, s, opts);
      if (!t) break;
      if (!used.emplace(t->start, t->goal).second) continue;
      out.push_back(std::move(*t));
      ++made;
    }
  }
  return out;
}

}  // namespace urbnav

#endif  // URBNAV_BENCH_HPP
