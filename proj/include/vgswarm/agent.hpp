#pragma once

// One captor's decision loop: detections -> relative positions -> local map
// -> fields and pattern -> state machine -> motion command. The step
// function sees only the agent's own state and its camera detections.

#include "vgswarm/camera.hpp"
#include "vgswarm/estimation.hpp"
#include "vgswarm/fsm.hpp"
#include "vgswarm/grn.hpp"
#include "vgswarm/localmap.hpp"
#include "vgswarm/planner.hpp"
#include "vgswarm/rng.hpp"
#include "vgswarm/world.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

namespace vgswarm {

/// Axis-aligned planar region, world frame.
struct Bounds {
  Vec2 min{-30.0, -30.0};
  Vec2 max{30.0, 30.0};

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

/// Everything an agent is configured with; shared read-only across agents.
struct AgentConfig {
  CameraRig rig;
  Calibration calibration;
  YMode y_mode = YMode::Planar;
  GrnParams grn;
  SamplingScheme scheme;
  MotionParams motion;
  PlanningWeights weights;
  SearchPolicy search;
  double epsilon_c = 0.02;
  int n_max = 10;
  double hold_altitude = 2.0;
  Bounds bounds;
  double merge_radius = 0.8;           // same-kind records closer than this are one object
  double obstacle_merge_radius = 0.4;
  double separation_radius = 1.5;  // neighbours closer than this cap the closing speed, m
  double separation_gain = 0.5;    // push-away speed at contact, fraction of max speed
};

struct AgentState {
  int id = 0;
  std::shared_ptr<const AgentConfig> config;
  Pose3 pose;  // own telemetry
  LocalMap map;
  AgentBehavior behavior;
  Rng rng;
  double search_heading = 0.0;  // compass, world frame
  std::int64_t tick = 0;
  std::optional<Vec3> last_position;

  // Outputs of the latest step.
  double c_c = 0.0;
  double c_p = 0.0;
  std::optional<EntrapPattern> pattern;
  bool keep_frame = false;
  std::optional<GrnFrame> frame;
};

inline AgentState make_agent(int id, std::shared_ptr<const AgentConfig> cfg, const Pose3& pose, std::uint64_t seed) {
  AgentState a;
  a.id = id;
  a.config = std::move(cfg);
  a.pose = pose;
  a.map.n_max = a.config->n_max;
  a.behavior.epsilon_c = a.config->epsilon_c;
  a.behavior.search = a.config->search;
  a.rng = Rng(seed);
  a.search_heading = pose.heading;
  return a;
}

/// Greedy clustering: each point joins the first cluster whose running mean
/// is within `radius`, else starts a new one.
inline std::vector<Vec3> merge_nearby(const std::vector<Vec3>& pts, double radius) {
  std::vector<Vec3> sum;
  std::vector<int> count;
  for (const auto& p : pts) {
    bool joined = false;
    for (std::size_t c = 0; c < sum.size() && !joined; ++c) {
      if ((sum[c] / count[c] - p).head<2>().norm() < radius) {
        sum[c] += p;
        ++count[c];
        joined = true;
      }
    }
    if (!joined) {
      sum.push_back(p);
      count.push_back(1);
    }
  }
  for (std::size_t c = 0; c < sum.size(); ++c) sum[c] /= count[c];
  return sum;
}

namespace detail {

inline std::vector<Vec2> planar(const std::vector<Vec3>& v) {
  std::vector<Vec2> out;
  out.reserve(v.size());
  for (const auto& p : v) out.emplace_back(p.x(), p.y());
  return out;
}

inline void perceive(AgentState& a, std::span<const Detection> detections) {
  const AgentConfig& cfg = *a.config;
  if (a.last_position) {
    const Vec3 moved = world_vector_to_local(a.pose.heading, a.pose.position - *a.last_position);
    for (auto& r : a.map.records) r.position -= moved;
  }
  a.last_position = a.pose.position;

  std::vector<Detection> used;
  std::vector<RelPosition> positions;
  for (Detection d : detections) {
    if (!cfg.calibration.fits.count(d.kind)) continue;
    if (d.truncated) {
      const auto restored = restore_truncated(cfg.rig, d.box);
      if (!restored) continue;
      d.box = *restored;
    }
    const double dist = cfg.calibration.distance(d.kind, d.area());
    if (!std::isfinite(dist) || !(dist > 0.0)) continue;
    used.push_back(d);
    positions.push_back(decompose(d, dist, cfg.rig, cfg.y_mode));
  }
  a.map = associate(std::move(a.map), used, positions, cfg.motion.dt, a.tick);
}

struct NeighborAvoid {
  double distance = std::numeric_limits<double>::infinity();
  Vec2 direction = Vec2::Zero();  // local unit vector toward the neighbour
};

inline NeighborAvoid nearest_neighbor(const LocalMap& map) {
  NeighborAvoid n;
  for (const auto& r : map.records) {
    if (r.kind != RecordKind::Neighbor) continue;
    const Vec2 d = r.position.head<2>();
    const double dist = d.norm();
    if (dist > 1e-9 && dist < n.distance) {
      n.distance = dist;
      n.direction = d / dist;
    }
  }
  return n;
}

inline Vec2 local_to_world_dir(double heading, const Vec2& v) {
  return v.x() * right_axis(heading) + v.y() * nose_axis(heading);
}

inline MotionCommand search_command(AgentState& a, double delta_h) {
  const AgentConfig& cfg = *a.config;
  const SearchPolicy& sp = a.behavior.search;
  if (!(sp.persistence > 0.0 && a.rng.uniform() < sp.persistence))
    a.search_heading = normalize_angle(a.search_heading + a.rng.normal(0.0, sp.turn_sigma));
  const NeighborAvoid avoid = nearest_neighbor(a.map);
  if (avoid.distance < sp.avoid_radius) {
    // Bounded turn away from a neighbour ahead of the travel direction.
    const Vec2 toward = local_to_world_dir(a.pose.heading, avoid.direction);
    const Vec2 nose = nose_axis(a.search_heading);
    if (toward.dot(nose) > 0.0) {
      const double side = nose.x() * toward.y() - nose.y() * toward.x();  // > 0: neighbour to the left
      a.search_heading = normalize_angle(a.search_heading + (side > 0.0 ? sp.avoid_turn : -sp.avoid_turn));
    }
  }
  const double s = cfg.motion.s_max();
  const Vec2 next = a.pose.position.head<2>() + s * nose_axis(a.search_heading);
  if (next.x() < cfg.bounds.min.x() || next.x() > cfg.bounds.max.x())
    a.search_heading = normalize_angle(-a.search_heading);
  if (next.y() < cfg.bounds.min.y() || next.y() > cfg.bounds.max.y())
    a.search_heading = normalize_angle(kPi - a.search_heading);
  return make_command(normalize_angle(a.search_heading - a.pose.heading), s, delta_h, cfg.motion);
}

}  // namespace detail

/// Removes velocity toward bodies inside the separation radius and adds a
/// push away that grows as they get closer.
inline Vec3 separate(const AgentConfig& cfg, const std::vector<Vec3>& bodies, Vec3 v) {
  Vec2 vp = v.head<2>();
  for (const auto& n : bodies) {
    const Vec2 d = n.head<2>();
    const double dist = d.norm();
    if (!(dist > 1e-9) || dist >= cfg.separation_radius) continue;
    const Vec2 u = d / dist;
    const double closing = vp.dot(u);
    if (closing > 0.0) vp -= closing * u;
    vp -= cfg.separation_gain * cfg.motion.max_speed * (1.0 - dist / cfg.separation_radius) * u;
  }
  v.head<2>() = vp;
  return clamp_norm(v, cfg.motion.max_speed);
}

/// Motion for the current state given this tick's fields.
inline MotionCommand act(AgentState& a, const GrnFrame& frame, double delta_h) {
  const AgentConfig& cfg = *a.config;
  if (!is_entrapping(a.behavior.state)) return detail::search_command(a, delta_h);
  const PlanningField field(frame, cfg.grn, cfg.weights);
  const double theta = cfg.scheme.angle(argmin_direction(direction_sums(field, cfg.scheme)));
  const double proxy = step_proxy(field, cfg.scheme, cfg.motion.step_deadband);
  return make_command(theta, dynamic_step(proxy, cfg.motion), delta_h, cfg.motion);
}

/// One decision tick. Returns no command on the initial tick.
inline std::optional<MotionCommand> agent_step(AgentState& a, std::span<const Detection> detections) {
  const AgentConfig& cfg = *a.config;
  detail::perceive(a, detections);

  MapSnapshot snap = snapshot(a.map);
  GrnInputs in;
  in.targets = detail::planar(merge_nearby(snap.targets, cfg.merge_radius));
  in.obstacles = detail::planar(merge_nearby(snap.obstacles, cfg.obstacle_merge_radius));
  in.neighbors = detail::planar(merge_nearby(snap.neighbors, cfg.merge_radius));

  GrnFrame frame = evaluate_grn(in, cfg.grn);
  const bool has_target = frame.pattern.has_value();
  a.c_c = frame.c_c;
  a.c_p = frame.c_p;
  a.pattern = frame.pattern;

  const BehaviorState before = a.behavior.state;
  a.behavior = transition(a.behavior, has_target, a.c_c, a.c_p);

  std::optional<MotionCommand> cmd;
  if (before != BehaviorState::Init) {
    double delta_h = cfg.hold_altitude - a.pose.position.z();
    if (has_target) {
      const auto targets = merge_nearby(snap.targets, cfg.merge_radius);
      const Vec3* nearest = &targets.front();
      for (const auto& t : targets)
        if (t.head<2>().norm() < nearest->head<2>().norm()) nearest = &t;
      delta_h = nearest->z();
    }
    cmd = act(a, frame, apply_deadband(delta_h, cfg.motion.altitude_deadband));
    std::vector<Vec3> nearby = snap.neighbors;
    nearby.insert(nearby.end(), snap.obstacles.begin(), snap.obstacles.end());
    cmd->velocity = separate(cfg, nearby, cmd->velocity);
  }
  if (a.keep_frame) a.frame = std::move(frame);
  ++a.tick;
  return cmd;
}

// The agent interface admits nothing but its own state and its detections.
static_assert(std::is_same_v<decltype(&agent_step),
                             std::optional<MotionCommand> (*)(AgentState&, std::span<const Detection>)>);

}  // namespace vgswarm
