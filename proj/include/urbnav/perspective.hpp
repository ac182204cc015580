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

#ifndef URBNAV_PERSPECTIVE_HPP
#define URBNAV_PERSPECTIVE_HPP

#include <algorithm>
#include <string_view>
#include <vector>

#include "urbnav/graph.hpp"

namespace urbnav {

enum class Direction { kForward, kRight, kBack, kLeft };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kForward: return "FORWARD";
    case Direction::kRight: return "RIGHT";
    case Direction::kBack: return "BACK";
    case Direction::kLeft: return "LEFT";
  }
  return "FORWARD";
}

/// One selectable view at a node. `index` is the action index offered to the policy.
struct Perspective {
  int index = 0;
  double heading = 0.0;
  Direction direction = Direction::kForward;
  double delta = 0.0;  // signed turn relative to the current heading, (-180, 180]
  NodeId target;
};

/// FORWARD |d|<=45, RIGHT d in (45,135], BACK |d|>135, LEFT d in [-135,-45).
inline Direction classify_turn(double delta) {
  if (std::abs(delta) <= 45.0) return Direction::kForward;
  if (delta > 45.0 && delta <= 135.0) return Direction::kRight;
  if (delta >= -135.0 && delta < -45.0) return Direction::kLeft;
  return Direction::kBack;
}

/// Navigable views at `v` for an agent facing `current_heading`, ordered by a
/// clockwise sweep that starts at the left edge of the FORWARD sector
/// (FORWARD first, then RIGHT, BACK, LEFT).
inline std::vector<Perspective> perspectives(const NavGraph& g, const NodeId& v, double current_heading) {
  const NodeIndex i = g.require(v);
  std::vector<Perspective> out;
  auto edges = g.out_edges(i);
  for (const auto& e : edges) {
    Perspective p;
    p.heading = e.azimuth;
    p.delta = signed_angle_diff(current_heading, e.azimuth);
    p.direction = classify_turn(p.delta);
    p.target = e.to;
    out.push_back(std::move(p));
  }
  auto sweep_key = [](const Perspective& p) {
    double k = p.delta + 45.0;
    if (k < 0.0) k += 360.0;
    return k;
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const Perspective& a, const Perspective& b) { return sweep_key(a) < sweep_key(b); });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].index = static_cast<int>(k);
  return out;
}

/// Heading an agent faces when an episode starts at `v`: the lowest-azimuth edge.
inline double initial_heading(const NavGraph& g, const NodeId& v) {
  auto edges = g.out_edges(g.require(v));
  return edges.empty() ? 0.0 : edges.front().azimuth;
}

}  // namespace urbnav

#endif  // URBNAV_PERSPECTIVE_HPP
