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

// Graph interchange file:
//   {nodes:[{id,lat,lon,headings[]}], edges:[{from,to,azimuth,length_m}],
//    pois:[{id,name,category,descriptors[],lat,lon}], visibility:[{node,poi}]}

#ifndef URBNAV_GRAPH_IO_HPP
#define URBNAV_GRAPH_IO_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "urbnav/graph.hpp"

namespace urbnav {

using json = nlohmann::json;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

inline json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw InputError("'" + path.string() + "' is not valid JSON");
  return doc;
}

namespace detail {

inline double finite_number(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw GraphError("schema violation: " + where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw GraphError("schema violation: " + where + "." + key + " must be finite");
  return d;
}

inline std::string string_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw GraphError("schema violation: " + where + "." + key + " must be a string");
  return j.at(key).get<std::string>();
}

inline const json& array_field(const json& doc, const char* key, bool required) {
  static const json empty = json::array();
  if (!doc.contains(key)) {
    if (required) throw GraphError(std::string("schema violation: missing '") + key + "' array");
    return empty;
  }
  const auto& a = doc.at(key);
  if (!a.is_array()) throw GraphError(std::string("schema violation: '") + key + "' must be an array");
  return a;
}

}  // namespace detail

/// Parses and validates a graph document.
inline NavGraph graph_from_json(const json& doc) {
  if (!doc.is_object()) throw GraphError("schema violation: graph document must be an object");
  std::vector<NavNode> nodes;
  std::vector<NavEdge> edges;
  std::vector<Poi> pois;
  std::vector<VisibilityLink> links;
  try {
    for (const auto& jn : detail::array_field(doc, "nodes", true)) {
      NavNode n;
      n.id = detail::string_field(jn, "id", "node");
      const std::string where = "node '" + n.id + "'";
      n.pos = {detail::finite_number(jn, "lat", where), detail::finite_number(jn, "lon", where)};
      if (!jn.contains("headings") || !jn.at("headings").is_array())
        throw GraphError("schema violation: " + where + ".headings must be an array");
      for (const auto& h : jn.at("headings")) {
        if (!h.is_number()) throw GraphError("schema violation: " + where + ".headings must hold numbers");
        n.headings.push_back(h.get<double>());
      }
      nodes.push_back(std::move(n));
    }
    for (const auto& je : detail::array_field(doc, "edges", true)) {
      NavEdge e;
      e.from = detail::string_field(je, "from", "edge");
      e.to = detail::string_field(je, "to", "edge");
      const std::string where = "edge " + e.from + "->" + e.to;
      e.azimuth = detail::finite_number(je, "azimuth", where);
      e.length_m = detail::finite_number(je, "length_m", where);
      edges.push_back(std::move(e));
    }
    for (const auto& jp : detail::array_field(doc, "pois", false)) {
      Poi p;
      p.id = detail::string_field(jp, "id", "poi");
      const std::string where = "poi '" + p.id + "'";
      p.name = detail::string_field(jp, "name", where);
      p.category = detail::string_field(jp, "category", where);
      if (jp.contains("descriptors")) {
        for (const auto& d : jp.at("descriptors")) {
          if (!d.is_string()) throw GraphError("schema violation: " + where + ".descriptors must hold strings");
          p.descriptors.push_back(d.get<std::string>());
        }
      }
      p.pos = {detail::finite_number(jp, "lat", where), detail::finite_number(jp, "lon", where)};
      pois.push_back(std::move(p));
    }
    for (const auto& jl : detail::array_field(doc, "visibility", false)) {
      links.push_back({detail::string_field(jl, "node", "visibility"), detail::string_field(jl, "poi", "visibility")});
    }
  } catch (const json::exception& e) {
    throw GraphError(std::string("schema violation: ") + e.what());
  }
  return NavGraph::build(std::move(nodes), std::move(edges), std::move(pois), std::move(links));
}

inline NavGraph load_graph(const std::filesystem::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const InputError& e) {
    throw GraphError(e.what());
  }
  return graph_from_json(doc);
}

/// Serializes nodes in graph order, then edges grouped by source in azimuth order.
inline json graph_to_json(const NavGraph& g) {
  json doc;
  doc["nodes"] = json::array();
  doc["edges"] = json::array();
  doc["pois"] = json::array();
  doc["visibility"] = json::array();
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const auto& n = g.node(i);
    doc["nodes"].push_back({{"id", n.id}, {"lat", n.pos.lat}, {"lon", n.pos.lon}, {"headings", n.headings}});
  }
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    for (const auto& e : g.out_edges(i)) {
      doc["edges"].push_back({{"from", e.from}, {"to", e.to}, {"azimuth", e.azimuth}, {"length_m", e.length_m}});
    }
  }
  for (const auto& p : g.pois()) {
    doc["pois"].push_back({{"id", p.id},
                           {"name", p.name},
                           {"category", p.category},
                           {"descriptors", p.descriptors},
                           {"lat", p.pos.lat},
                           {"lon", p.pos.lon}});
  }
  for (const auto& l : g.visibility()) doc["visibility"].push_back({{"node", l.node}, {"poi", l.poi}});
  return doc;
}

inline void save_graph(const NavGraph& g, const std::filesystem::path& path) {
  write_text_file(path, graph_to_json(g).dump(1) + "\n");
}

}  // namespace urbnav

#endif  // URBNAV_GRAPH_IO_HPP
