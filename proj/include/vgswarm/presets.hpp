#pragma once

// Built-in scenarios: open field (4 or 10 captors), parallel and converging
// wall lanes, random obstacle scatter, and mid-run captor failures.

#include "vgswarm/rng.hpp"
#include "vgswarm/sim.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace vgswarm {

/// Captors in a row south of the target, facing it, placed so their mean
/// distance to the target is `distance`.
inline std::vector<CaptorSpec> captor_row(const Vec3& target, int n, double spacing, double distance, double altitude) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back((i - 0.5 * (n - 1)) * spacing);
  auto mean_dist = [&](double back) {
    double s = 0.0;
    for (double x : xs) s += std::hypot(x, back);
    return s / n;
  };
  double lo = 0.0, hi = distance;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_dist(mid) < distance ? lo : hi) = mid;
  }
  const double back = 0.5 * (lo + hi);
  std::vector<CaptorSpec> out;
  for (double x : xs) {
    CaptorSpec c;
    c.pose.position = {target.x() + x, target.y() - back, altitude};
    c.pose.heading = std::atan2(-x, back);
    out.push_back(c);
  }
  return out;
}

/// Slides the captor formation along the line from the first target to the
/// formation centroid until the mean planar captor-target distance equals
/// `distance`. Spacing and headings are kept.
inline Scenario with_initial_distance(Scenario s, double distance) {
  if (s.targets.empty() || s.captors.empty()) throw ScenarioError("with_initial_distance: need a target and captors");
  if (!(distance > 0.0)) throw ScenarioError("with_initial_distance: distance must be positive");
  const Vec2 t = s.targets.front().pose.position.head<2>();
  Vec2 centroid = Vec2::Zero();
  for (const auto& c : s.captors) centroid += c.pose.position.head<2>();
  centroid /= static_cast<double>(s.captors.size());
  Vec2 dir = centroid - t;
  dir = dir.norm() > 1e-9 ? Vec2(dir.normalized()) : Vec2(0.0, -1.0);
  const std::vector<CaptorSpec> base = s.captors;
  auto mean_dist = [&](double shift) {
    double sum = 0.0;
    for (const auto& c : base) sum += (c.pose.position.head<2>() + shift * dir - t).norm();
    return sum / static_cast<double>(base.size());
  };
  double lo = -(centroid - t).norm(), hi = distance + 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_dist(mid) < distance ? lo : hi) = mid;
  }
  const double shift = 0.5 * (lo + hi);
  for (auto& c : s.captors) c.pose.position.head<2>() += shift * dir;
  return s;
}

inline Scenario open_scenario(int captors, double distance) {
  Scenario s;
  s.name = captors > 4 ? "open-10v1" : "open-4v1";
  TargetSpec t;
  t.pose.position = {0.0, 0.0, 2.0};
  t.policy.kind = TargetPolicy::Kind::Evade;
  s.targets.push_back(t);
  const double spacing = captors > 4 ? 1.5 : 2.0;
  s.captors = captor_row(t.pose.position, captors, spacing, distance, 2.0);
  s.bounds = {{-30.0, -30.0}, {30.0, 30.0}};
  if (captors > 4) s.grn.neighbor_reach = 2.2;
  s.max_ticks = 400;
  return s;
}

inline std::vector<ObstacleSpec> wall(const Vec2& a, const Vec2& b, double spacing, double radius = 0.4) {
  std::vector<ObstacleSpec> out;
  const double len = (b - a).norm();
  const int n = static_cast<int>(std::floor(len / spacing));
  for (int i = 0; i <= n; ++i) out.push_back({a + (b - a) * (i * spacing / len), radius, 6.0});
  return out;
}

inline Scenario narrow_parallel() {
  Scenario s;
  s.name = "narrow-parallel";
  TargetSpec t;
  t.pose.position = {0.0, 0.0, 2.0};
  s.targets.push_back(t);
  for (double side : {-4.5, 4.5}) {
    auto w = wall({side, -16.0}, {side, 16.0}, 1.5);
    s.obstacles.insert(s.obstacles.end(), w.begin(), w.end());
  }
  s.captors = captor_row(t.pose.position, 4, 1.0, 8.0, 2.0);
  s.bounds = {{-20.0, -20.0}, {20.0, 20.0}};
  s.max_ticks = 400;
  return s;
}

/// Lane narrowing toward +y (the apex side).
inline Scenario narrow_conical() {
  Scenario s;
  s.name = "narrow-conical";
  TargetSpec t;
  t.pose.position = {0.0, 0.0, 2.0};
  s.targets.push_back(t);
  auto half = [](double y) { return 4.5 - 0.2 * y; };
  for (double side : {-1.0, 1.0}) {
    auto w = wall({side * half(-14.0), -14.0}, {side * half(12.0), 12.0}, 1.5);
    s.obstacles.insert(s.obstacles.end(), w.begin(), w.end());
  }
  s.captors = captor_row(t.pose.position, 4, 1.0, 8.0, 2.0);
  s.bounds = {{-20.0, -20.0}, {20.0, 20.0}};
  s.max_ticks = 400;
  return s;
}

/// Dart-throwing Poisson-disc scatter that keeps clear of the target and
/// of the captors' start row.
inline Scenario random_obstacles(std::uint64_t layout_seed = 11) {
  Scenario s;
  s.name = "random-obstacles";
  TargetSpec t;
  t.pose.position = {0.0, 0.0, 2.0};
  s.targets.push_back(t);
  s.captors = captor_row(t.pose.position, 4, 2.0, 9.0, 2.0);
  s.bounds = {{-25.0, -25.0}, {25.0, 25.0}};
  Rng rng(derive_seed(layout_seed, 0, 0x0B5));
  const double min_gap = 3.0;
  for (int tries = 0; tries < 4000 && s.obstacles.size() < 18; ++tries) {
    const Vec2 p{rng.uniform(-14.0, 14.0), rng.uniform(-14.0, 14.0)};
    if (p.norm() < 6.5) continue;
    bool ok = true;
    for (const auto& c : s.captors)
      if ((p - c.pose.position.head<2>()).norm() < 2.5) ok = false;
    for (const auto& o : s.obstacles)
      if ((p - o.center).norm() < min_gap) ok = false;
    if (ok) s.obstacles.push_back({p, 0.4, 6.0});
  }
  s.max_ticks = 400;
  return s;
}

inline Scenario failure_injection() {
  Scenario s = open_scenario(10, 10.0);
  s.name = "failure-injection";
  s.max_ticks = 600;
  for (int c : {1, 4, 7}) s.failures.push_back({300, c});
  return s;
}

/// Target escapes 12 m north at 4 m/s after `start_tick`, then stops.
inline Scenario escape_scenario(std::int64_t start_tick = 240) {
  Scenario s = open_scenario(4, 10.0);
  s.name = "escape";
  auto& p = s.targets.front().policy;
  p.kind = TargetPolicy::Kind::Waypoints;
  p.speed = 4.0;
  p.start_tick = start_tick;
  p.waypoints = {{0.0, 12.0, 2.0}};
  s.targets.front().max_speed = 4.0;
  s.max_ticks = start_tick + 400;
  return s;
}

/// Captors start 50 m from a static target facing away from it; the run is
/// too short for a search to bring the target into camera range.
inline Scenario unreachable() {
  Scenario s;
  s.name = "unreachable";
  TargetSpec t;
  t.pose.position = {0.0, 25.0, 2.0};
  t.policy.kind = TargetPolicy::Kind::Static;
  s.targets.push_back(t);
  s.captors = captor_row(t.pose.position, 4, 2.0, 50.0, 2.0);
  for (auto& c : s.captors) c.pose.heading = normalize_angle(c.pose.heading + kPi);
  s.bounds = {{-30.0, -30.0}, {30.0, 30.0}};
  s.max_ticks = 120;
  return s;
}

inline std::vector<std::string> preset_names() {
  return {"open-4v1", "open-10v1", "narrow-parallel", "narrow-conical", "random-obstacles", "failure-injection", "escape",
          "unreachable"};
}

/// Throws ScenarioError for an unknown name.
inline Scenario preset(const std::string& name) {
  if (name == "open-4v1") return open_scenario(4, 10.0);
  if (name == "open-10v1") return open_scenario(10, 10.0);
  if (name == "narrow-parallel") return narrow_parallel();
  if (name == "narrow-conical") return narrow_conical();
  if (name == "random-obstacles") return random_obstacles();
  if (name == "failure-injection") return failure_injection();
  if (name == "escape") return escape_scenario();
  if (name == "unreachable") return unreachable();
  throw ScenarioError("unknown preset: " + name);
}

}  // namespace vgswarm
