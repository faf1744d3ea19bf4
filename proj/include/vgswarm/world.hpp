#pragma once

// Ground-truth world model.
//
// World frame: x east, y north, z up. Headings are compass yaw (clockwise
// seen from above, 0 = north = +y), which is the NED yaw convention; logs
// are written in NED via to_ned(). Agent local frame: +y along the nose,
// +x to the right, +z up.

#include "vgswarm/common.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vgswarm {

struct Pose3 {
  Vec3 position = Vec3::Zero();
  double heading = 0.0;  // [-pi, pi)
};

enum class BodyKind { Captor, Target, Obstacle };

inline std::string_view to_string(BodyKind k) {
  switch (k) {
    case BodyKind::Captor: return "captor";
    case BodyKind::Target: return "target";
    case BodyKind::Obstacle: return "obstacle";
  }
  return "?";
}

inline BodyKind body_kind_from_string(std::string_view s) {
  if (s == "captor") return BodyKind::Captor;
  if (s == "target") return BodyKind::Target;
  if (s == "obstacle") return BodyKind::Obstacle;
  throw std::invalid_argument("unknown body kind: " + std::string(s));
}

/// A simulated body. Captors and targets are spheres of `radius` centred on
/// the pose; obstacles are vertical cylinders standing on the ground plane
/// (pose z = 0) with footprint `radius` and height `height`.
struct Body {
  int id = 0;
  BodyKind kind = BodyKind::Captor;
  Pose3 pose;
  Vec3 velocity = Vec3::Zero();
  double radius = 0.35;
  double height = 0.0;
  double max_speed = 5.0;
  bool failed = false;
};

struct WorldState {
  std::vector<Body> bodies;
  std::int64_t tick = 0;
  double dt = 0.05;

  const Body* find(int id) const {
    for (const auto& b : bodies)
      if (b.id == id) return &b;
    return nullptr;
  }
  Body* find(int id) {
    for (auto& b : bodies)
      if (b.id == id) return &b;
    return nullptr;
  }
};

inline void validate(const WorldState& w) {
  std::set<int> ids;
  for (const auto& b : w.bodies) {
    if (!ids.insert(b.id).second)
      throw std::invalid_argument("duplicate body id " + std::to_string(b.id));
    if (!(b.radius > 0.0))
      throw std::invalid_argument("body radius must be positive");
    if (b.kind == BodyKind::Obstacle && b.velocity.norm() != 0.0)
      throw std::invalid_argument("obstacles must be static");
  }
  if (!(w.dt > 0.0)) throw std::invalid_argument("dt must be positive");
}

// Nose and right unit vectors of a heading, in the world x/y plane.
inline Vec2 nose_axis(double heading) { return {std::sin(heading), std::cos(heading)}; }
inline Vec2 right_axis(double heading) { return {std::cos(heading), -std::sin(heading)}; }

inline Vec3 world_to_local(const Pose3& observer, const Vec3& point) {
  const Vec3 d = point - observer.position;
  const Vec2 n = nose_axis(observer.heading);
  const Vec2 r = right_axis(observer.heading);
  return {d.x() * r.x() + d.y() * r.y(), d.x() * n.x() + d.y() * n.y(), d.z()};
}

inline Vec3 local_vector_to_world(double heading, const Vec3& v) {
  const Vec2 n = nose_axis(heading);
  const Vec2 r = right_axis(heading);
  return {v.x() * r.x() + v.y() * n.x(), v.x() * r.y() + v.y() * n.y(), v.z()};
}

inline Vec3 world_vector_to_local(double heading, const Vec3& v) {
  const Vec2 n = nose_axis(heading);
  const Vec2 r = right_axis(heading);
  return {v.x() * r.x() + v.y() * r.y(), v.x() * n.x() + v.y() * n.y(), v.z()};
}

inline Vec3 local_to_world(const Pose3& observer, const Vec3& local) {
  return observer.position + local_vector_to_world(observer.heading, local);
}

// East-North-Up to North-East-Down.
inline Vec3 to_ned(const Vec3& enu) { return {enu.y(), enu.x(), -enu.z()}; }

inline Vec3 clamp_norm(const Vec3& v, double max_norm) {
  const double n = v.norm();
  if (n > max_norm && n > 0.0) return v * (max_norm / n);
  return v;
}

/// Advances every body by one tick under velocity commands.
/// Commanded bodies are speed-clamped; uncommanded bodies stop; failed
/// bodies hold position regardless of command.
inline WorldState step_kinematics(const WorldState& world,
                                  const std::map<int, Vec3>& commands) {
  for (const auto& [id, v] : commands) {
    if (world.find(id) == nullptr)
      throw std::out_of_range("step_kinematics: unknown body id " + std::to_string(id));
    if (!v.allFinite()) throw std::invalid_argument("step_kinematics: non-finite command");
  }
  WorldState next = world;
  for (auto& b : next.bodies) {
    if (b.failed || b.kind == BodyKind::Obstacle) {
      b.velocity.setZero();
      continue;
    }
    auto it = commands.find(b.id);
    b.velocity = it == commands.end() ? Vec3::Zero() : clamp_norm(it->second, b.max_speed);
    b.pose.position += b.velocity * world.dt;
  }
  next.tick = world.tick + 1;
  return next;
}

namespace detail {

inline bool spheres_overlap(const Body& a, const Body& b) {
  return (a.pose.position - b.pose.position).norm() < a.radius + b.radius;
}

inline bool sphere_cylinder_overlap(const Body& s, const Body& c) {
  const Vec3 d = s.pose.position - c.pose.position;
  const double planar = std::hypot(d.x(), d.y());
  const double z = s.pose.position.z();
  const double base = c.pose.position.z();
  return planar < s.radius + c.radius && z > base - s.radius && z < base + c.height + s.radius;
}

}  // namespace detail

/// All intersecting body pairs, ordered by (lower id, higher id). Pairs of
/// obstacles are scenery and not reported.
inline std::vector<std::pair<int, int>> check_collisions(const WorldState& world) {
  std::vector<const Body*> sorted;
  sorted.reserve(world.bodies.size());
  for (const auto& b : world.bodies) sorted.push_back(&b);
  std::sort(sorted.begin(), sorted.end(), [](const Body* a, const Body* b) { return a->id < b->id; });

  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const Body& a = *sorted[i];
      const Body& b = *sorted[j];
      const bool a_obs = a.kind == BodyKind::Obstacle;
      const bool b_obs = b.kind == BodyKind::Obstacle;
      bool hit = false;
      if (a_obs && b_obs) continue;
      if (a_obs) hit = detail::sphere_cylinder_overlap(b, a);
      else if (b_obs) hit = detail::sphere_cylinder_overlap(a, b);
      else hit = detail::spheres_overlap(a, b);
      if (hit) out.emplace_back(a.id, b.id);
    }
  }
  return out;
}

}  // namespace vgswarm
