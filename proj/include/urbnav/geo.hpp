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

#ifndef URBNAV_GEO_HPP
#define URBNAV_GEO_HPP

#include <algorithm>
#include <cmath>
#include <numbers>

namespace urbnav {

/// Mean Earth radius in meters (IUGG).
inline constexpr double kEarthRadiusM = 6371008.8;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Coordinates are finite and inside the valid ranges; the poles themselves
/// are rejected because headings are undefined there.
inline bool is_valid(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat > -90.0 && p.lat < 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

/// Great-circle distance in meters (haversine).
inline double geodesic_distance(const LatLon& a, const LatLon& b) {
  if (a == b) return 0.0;
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg_to_rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

/// Wraps any angle into [0, 360).
inline double normalize_heading(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

/// Signed difference `to - from` wrapped into (-180, 180].
inline double signed_angle_diff(double from, double to) {
  double d = normalize_heading(to - from);
  if (d > 180.0) d -= 360.0;
  return d;
}

/// Initial bearing from `a` towards `b`, degrees clockwise from north in [0, 360).
inline double initial_bearing(const LatLon& a, const LatLon& b) {
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double dlambda = deg_to_rad(b.lon - a.lon);
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  return normalize_heading(rad_to_deg(std::atan2(y, x)));
}

/// Point reached by moving `north_m` meters north and `east_m` meters east of
/// `origin` on a local tangent plane. Accurate to well under a millimetre at
/// the scale of a few kilometres.
inline LatLon offset_meters(const LatLon& origin, double north_m, double east_m) {
  const double dlat = rad_to_deg(north_m / kEarthRadiusM);
  const double dlon = rad_to_deg(east_m / (kEarthRadiusM * std::cos(deg_to_rad(origin.lat))));
  return {origin.lat + dlat, origin.lon + dlon};
}

}  // namespace urbnav

#endif  // URBNAV_GEO_HPP
