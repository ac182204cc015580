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

// Episode metrics and aggregation.
//
//   TCE   stopped exactly at the goal node
//   TCP-D stopped within D meters (geodesic) of the goal
//   TCC   stopped at a node whose visible POIs satisfy the task mapping
//   SPL   S * l / max(p, l), S = TCP-50m, l = reference length, p = walked length
//   SPD   geodesic distance from the terminal node to the goal
//   nDTW  DTW cost (meters) between walked and reference node positions / |reference|
//   AS    steps taken (backtrack hops included)

#ifndef URBNAV_METRICS_HPP
#define URBNAV_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "urbnav/bench.hpp"
#include "urbnav/routing.hpp"
#include "urbnav/trajectory.hpp"

namespace urbnav {

struct EpisodeMetrics {
  bool tce = false;
  std::vector<std::pair<double, bool>> tcp;  // (threshold m, success), thresholds ascending
  bool tcc = false;
  double spl = 0.0;
  double spd = 0.0;
  double ndtw = 0.0;
  int steps = 0;

  bool tcp_at(double d) const {
    for (const auto& [t, ok] : tcp) {
      if (t == d) return ok;
    }
    throw std::out_of_range("no TCP threshold " + std::to_string(d));
  }

  bool operator==(const EpisodeMetrics&) const = default;
};

inline bool stopped(const Trajectory& t) { return t.termination == Termination::kStopped; }

inline bool tce(const Trajectory& t, const Task& task) { return stopped(t) && t.terminal == task.goal; }

inline double spd(const NavGraph& g, const Trajectory& t, const Task& task) {
  return geodesic_distance(g.node(t.terminal).pos, g.node(task.goal).pos);
}

inline bool tcp(const NavGraph& g, const Trajectory& t, const Task& task, double d_m) {
  return stopped(t) && spd(g, t, task) <= d_m;
}

inline bool tcc(const NavGraph& g, const Trajectory& t, const Task& task) {
  return stopped(t) && node_satisfies(g, g.require(t.terminal), task.mapping);
}

/// Length of all traversed edges, backtrack hops included.
inline double walked_length_m(const NavGraph& g, const Trajectory& t) {
  return path_length_m(g, t.node_sequence());
}

inline double spl_term(const NavGraph& g, const Trajectory& t, const Task& task) {
  const double s = tcp(g, t, task, 50.0) ? 1.0 : 0.0;
  const double l = path_length_m(g, task.gt_path);
  const double p = walked_length_m(g, t);
  const double denom = std::max(p, l);
  if (denom <= 0.0) return s;
  return s * l / denom;
}

/// Accumulated DTW cost with geodesic local cost, divided by |reference|.
inline double ndtw(const std::vector<LatLon>& walked, const std::vector<LatLon>& reference) {
  const std::size_t m = walked.size();
  const std::size_t r = reference.size();
  if (r == 0) throw std::invalid_argument("empty reference path");
  if (m == 0) throw std::invalid_argument("empty walked path");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(r + 1, inf);
  std::vector<double> cur(r + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= r; ++j) {
      const double cost = geodesic_distance(walked[i - 1], reference[j - 1]);
      cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[r] / static_cast<double>(r);
}

inline std::vector<LatLon> positions(const NavGraph& g, const std::vector<NodeId>& nodes) {
  std::vector<LatLon> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(g.node(n).pos);
  return out;
}

inline double ndtw(const NavGraph& g, const Trajectory& t, const Task& task) {
  return ndtw(positions(g, t.node_sequence()), positions(g, task.gt_path));
}

inline EpisodeMetrics compute_metrics(const NavGraph& g, const Trajectory& t, const Task& task) {
  EpisodeMetrics m;
  m.tce = tce(t, task);
  auto thresholds = t.config.tcp_thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  for (double d : thresholds) m.tcp.emplace_back(d, tcp(g, t, task, d));
  m.tcc = tcc(g, t, task);
  m.spl = spl_term(g, t, task);
  m.spd = spd(g, t, task);
  m.ndtw = ndtw(g, t, task);
  m.steps = t.moves();
  return m;
}

inline json metrics_to_json(const EpisodeMetrics& m) {
  json tcp = json::array();
  for (const auto& [d, ok] : m.tcp) tcp.push_back({{"threshold_m", d}, {"success", ok}});
  return {{"TCE", m.tce},   {"TCP", tcp},       {"TCC", m.tcc},   {"SPL", m.spl},
          {"SPD", m.spd},   {"nDTW", m.ndtw},   {"steps", m.steps}};
}

// ---------------------------------------------------------------------------
// Aggregation.

enum class GroupBy { kOverall, kCategory, kCity };

inline std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kOverall: return "overall";
    case GroupBy::kCategory: return "category";
    case GroupBy::kCity: return "city";
  }
  return "overall";
}

inline GroupBy group_by_from_string(std::string_view s) {
  for (auto g : {GroupBy::kOverall, GroupBy::kCategory, GroupBy::kCity}) {
    if (to_string(g) == s) return g;
  }
  throw std::invalid_argument("unknown grouping '" + std::string(s) + "'");
}

struct EpisodeResult {
  std::string task_id;
  std::string city;
  InstructionCategory category = InstructionCategory::kBasicPoi;
  int round = 1;
  Termination termination = Termination::kStepCap;
  EpisodeMetrics metrics;
};

/// Means over a group. TCE/TCP/TCC/SPL are fractions in [0,1].
struct MetricReport {
  std::string group_by;
  std::string group;
  int episodes = 0;
  double tce = 0.0;
  std::vector<std::pair<double, double>> tcp;
  double tcc = 0.0;
  double spl = 0.0;
  double spd = 0.0;
  double ndtw = 0.0;
  double as = 0.0;

  double tcp_at(double d) const {
    for (const auto& [t, v] : tcp) {
      if (t == d) return v;
    }
    throw std::out_of_range("no TCP threshold " + std::to_string(d));
  }
};

namespace detail {

inline MetricReport mean_of(const std::string& group_by, const std::string& group,
                            const std::vector<const EpisodeResult*>& rows) {
  MetricReport r;
  r.group_by = group_by;
  r.group = group;
  r.episodes = static_cast<int>(rows.size());
  if (rows.empty()) return r;
  const double n = static_cast<double>(rows.size());
  for (const auto& [d, ok] : rows.front()->metrics.tcp) r.tcp.emplace_back(d, 0.0);
  // Sums run in row order, which callers fix by sorting, so results do not
  // depend on completion order.
  for (const auto* e : rows) {
    const auto& m = e->metrics;
    r.tce += m.tce ? 1.0 : 0.0;
    for (std::size_t i = 0; i < r.tcp.size() && i < m.tcp.size(); ++i) r.tcp[i].second += m.tcp[i].second ? 1.0 : 0.0;
    r.tcc += m.tcc ? 1.0 : 0.0;
    r.spl += m.spl;
    r.spd += m.spd;
    r.ndtw += m.ndtw;
    r.as += m.steps;
  }
  r.tce /= n;
  for (auto& [d, v] : r.tcp) v /= n;
  r.tcc /= n;
  r.spl /= n;
  r.spd /= n;
  r.ndtw /= n;
  r.as /= n;
  return r;
}

}  // namespace detail

/// One report per non-empty group in a fixed order (category enum order, city
/// name order). Input order does not matter.
inline std::vector<MetricReport> aggregate(std::vector<EpisodeResult> results, GroupBy by) {
  std::sort(results.begin(), results.end(), [](const EpisodeResult& a, const EpisodeResult& b) {
    return std::tie(a.task_id, a.round) < std::tie(b.task_id, b.round);
  });
  std::vector<MetricReport> out;
  if (results.empty()) return out;
  const std::string label(to_string(by));
  if (by == GroupBy::kOverall) {
    std::vector<const EpisodeResult*> all;
    for (const auto& r : results) all.push_back(&r);
    out.push_back(detail::mean_of(label, "Overall", all));
    return out;
  }
  if (by == GroupBy::kCategory) {
    for (auto c : kAllInstructionCategories) {
      std::vector<const EpisodeResult*> rows;
      for (const auto& r : results) {
        if (r.category == c) rows.push_back(&r);
      }
      if (!rows.empty()) out.push_back(detail::mean_of(label, std::string(to_string(c)), rows));
    }
    return out;
  }
  std::map<std::string, std::vector<const EpisodeResult*>> by_city;
  for (const auto& r : results) by_city[r.city].push_back(&r);
  for (const auto& [city, rows] : by_city) out.push_back(detail::mean_of(label, city, rows));
  return out;
}

/// Grouped rows followed by the overall row (the overall row alone for kOverall).
inline std::vector<MetricReport> report_rows(const std::vector<EpisodeResult>& results, GroupBy by) {
  auto rows = aggregate(results, by);
  if (by != GroupBy::kOverall) {
    for (auto& o : aggregate(results, GroupBy::kOverall)) {
      o.group_by = std::string(to_string(by));
      rows.push_back(std::move(o));
    }
  }
  return rows;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string tcp_column(double d) {
  if (d == std::floor(d)) return "TCP-" + std::to_string(static_cast<long long>(d)) + "m";
  return "TCP-" + format_fixed(d, 1) + "m";
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace detail

/// Columns: group_by,group,episodes,TCE,TCP-<D>m...,TCC,SPL,SPD,nDTW,AS.
/// Rates are percentages with one decimal; SPD, nDTW and AS use two.
inline std::string reports_to_csv(const std::vector<MetricReport>& rows, const std::vector<double>& thresholds) {
  std::string out = "group_by,group,episodes,TCE";
  for (double d : thresholds) out += "," + tcp_column(d);
  out += ",TCC,SPL,SPD,nDTW,AS\n";
  for (const auto& r : rows) {
    out += detail::csv_field(r.group_by) + "," + detail::csv_field(r.group) + "," + std::to_string(r.episodes) + "," +
           format_fixed(100.0 * r.tce, 1);
    for (double d : thresholds) out += "," + format_fixed(100.0 * r.tcp_at(d), 1);
    out += "," + format_fixed(100.0 * r.tcc, 1) + "," + format_fixed(100.0 * r.spl, 1) + "," +
           format_fixed(r.spd, 2) + "," + format_fixed(r.ndtw, 2) + "," + format_fixed(r.as, 2) + "\n";
  }
  return out;
}

inline json reports_to_json(const std::vector<MetricReport>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j = {{"group_by", r.group_by}, {"group", r.group}, {"episodes", r.episodes}, {"TCE", r.tce}};
    for (const auto& [d, v] : r.tcp) j[tcp_column(d)] = v;
    j["TCC"] = r.tcc;
    j["SPL"] = r.spl;
    j["SPD"] = r.spd;
    j["nDTW"] = r.ndtw;
    j["AS"] = r.as;
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Per-episode table, one row per (task, round).
inline std::string episodes_to_csv(std::vector<EpisodeResult> results, const std::vector<double>& thresholds) {
  std::sort(results.begin(), results.end(), [](const EpisodeResult& a, const EpisodeResult& b) {
    return std::tie(a.task_id, a.round) < std::tie(b.task_id, b.round);
  });
  std::string out = "task_id,round,city,category,termination,TCE";
  for (double d : thresholds) out += "," + tcp_column(d);
  out += ",TCC,SPL,SPD,nDTW,steps\n";
  for (const auto& e : results) {
    const auto& m = e.metrics;
    out += detail::csv_field(e.task_id) + "," + std::to_string(e.round) + "," + detail::csv_field(e.city) + "," +
           detail::csv_field(std::string(to_string(e.category))) + "," + std::string(to_string(e.termination)) + "," +
           (m.tce ? "1" : "0");
    for (double d : thresholds) out += std::string(",") + (m.tcp_at(d) ? "1" : "0");
    out += std::string(",") + (m.tcc ? "1" : "0") + "," + format_fixed(m.spl, 6) + "," + format_fixed(m.spd, 4) + "," +
           format_fixed(m.ndtw, 4) + "," + std::to_string(m.steps) + "\n";
  }
  return out;
}

}  // namespace urbnav

#endif  // URBNAV_METRICS_HPP
