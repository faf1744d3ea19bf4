#pragma once

// Scenario definition and the deterministic tick loop.
//
// Per tick: failures are applied, every active captor senses the (possibly
// delayed) world and runs agent_step against that immutable snapshot,
// targets follow their policies, then all commands are integrated at once
// and collisions are recorded. Agents may be stepped on several threads;
// each owns its random streams, so the result does not depend on the
// thread count.

#include "vgswarm/agent.hpp"
#include "vgswarm/camera.hpp"
#include "vgswarm/estimation.hpp"
#include "vgswarm/world.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace vgswarm {

struct TargetPolicy {
  enum class Kind { Static, Waypoints, Evade };
  Kind kind = Kind::Static;
  // Waypoints
  std::vector<Vec3> waypoints;
  double speed = 0.0;
  std::int64_t start_tick = 0;
  // Evade
  double gain = 3.0;
  double trigger_radius = 3.5;
};

inline std::string_view to_string(TargetPolicy::Kind k) {
  switch (k) {
    case TargetPolicy::Kind::Static: return "static";
    case TargetPolicy::Kind::Waypoints: return "waypoints";
    case TargetPolicy::Kind::Evade: return "evade";
  }
  return "?";
}

struct CaptorSpec {
  Pose3 pose;
  double radius = 0.35;
  double max_speed = 5.0;
};

struct TargetSpec {
  Pose3 pose;
  TargetPolicy policy;
  double radius = 0.35;
  double max_speed = 3.0;
};

struct ObstacleSpec {
  Vec2 center = Vec2::Zero();
  double radius = 0.4;
  double height = 6.0;
};

struct FailureSpec {
  std::int64_t tick = 0;
  int captor = 0;  // index into Scenario::captors
};

/// Captor behaviour knobs that are not part of the field model.
struct CaptorTuning {
  SearchPolicy search;
  PlanningWeights weights;
  double step_ref = 2.0;
  double step_deadband = 0.15;
  double altitude_deadband = 0.1;
  double k_scale = 1.0;
  double epsilon_c = 0.02;
  int n_max = 10;
  YMode y_mode = YMode::Planar;
  double hold_altitude = 2.0;
};

struct Scenario {
  std::string name = "scenario";
  Bounds bounds;
  std::vector<CaptorSpec> captors;
  std::vector<TargetSpec> targets;
  std::vector<ObstacleSpec> obstacles;
  NoiseModel noise;
  GrnParams grn;
  SamplingScheme scheme;
  CameraRig rig;
  CaptorTuning tuning;
  double dt = 0.05;
  std::int64_t max_ticks = 400;
  std::uint64_t seed = 1;
  std::vector<FailureSpec> failures;
};

inline constexpr int kTargetIdBase = 100;
inline constexpr int kObstacleIdBase = 1000;

inline WorldState initial_world(const Scenario& s) {
  WorldState w;
  w.dt = s.dt;
  for (std::size_t i = 0; i < s.captors.size(); ++i) {
    Body b;
    b.id = static_cast<int>(i);
    b.kind = BodyKind::Captor;
    b.pose = s.captors[i].pose;
    b.radius = s.captors[i].radius;
    b.max_speed = s.captors[i].max_speed;
    w.bodies.push_back(b);
  }
  for (std::size_t i = 0; i < s.targets.size(); ++i) {
    Body b;
    b.id = kTargetIdBase + static_cast<int>(i);
    b.kind = BodyKind::Target;
    b.pose = s.targets[i].pose;
    b.radius = s.targets[i].radius;
    b.max_speed = s.targets[i].max_speed;
    w.bodies.push_back(b);
  }
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    Body b;
    b.id = kObstacleIdBase + static_cast<int>(i);
    b.kind = BodyKind::Obstacle;
    b.pose.position = {s.obstacles[i].center.x(), s.obstacles[i].center.y(), 0.0};
    b.radius = s.obstacles[i].radius;
    b.height = s.obstacles[i].height;
    b.max_speed = 0.0;
    w.bodies.push_back(b);
  }
  return w;
}

inline void validate(const Scenario& s) {
  auto fail = [](const std::string& m) { throw ScenarioError("scenario: " + m); };
  if (!(s.dt > 0.0)) fail("dt must be positive");
  if (s.max_ticks < 0) fail("max_ticks must be non-negative");
  if (!(s.bounds.max.x() > s.bounds.min.x() && s.bounds.max.y() > s.bounds.min.y())) fail("empty bounds");
  try {
    s.grn.validate();
    s.scheme.validate();
    s.rig.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  for (const auto& t : s.targets) {
    if (t.policy.kind == TargetPolicy::Kind::Waypoints && t.policy.speed > t.max_speed)
      fail("target waypoint speed exceeds its max speed");
    if (t.policy.kind == TargetPolicy::Kind::Waypoints && t.policy.waypoints.empty()) fail("waypoint policy without waypoints");
  }
  for (const auto& f : s.failures)
    if (f.captor < 0 || f.captor >= static_cast<int>(s.captors.size())) fail("failure refers to an unknown captor");
  const WorldState w = initial_world(s);
  for (const auto& b : w.bodies)
    if (!s.bounds.contains(b.pose.position.head<2>())) fail("body " + std::to_string(b.id) + " starts outside bounds");
  if (!check_collisions(w).empty()) fail("bodies collide initially");
}

/// Repulsion from captors inside the trigger radius: gain times the mean of
/// the unit vectors pointing from each such captor to the target, clamped to
/// the target's max speed. Zero when none is in range.
inline Vec3 evade_policy(const Body& target, const std::vector<Vec3>& captors, double gain, double trigger_radius) {
  Vec2 sum = Vec2::Zero();
  int n = 0;
  for (const auto& c : captors) {
    const Vec2 d = target.pose.position.head<2>() - c.head<2>();
    const double r = d.norm();
    if (r > trigger_radius || r <= 0.0) continue;
    sum += d / r;
    ++n;
  }
  if (n == 0) return Vec3::Zero();
  const Vec2 v = gain * sum / n;
  return clamp_norm(Vec3{v.x(), v.y(), 0.0}, target.max_speed);
}

// ---------------------------------------------------------------------------
// Run log

struct BodySample {
  int id = 0;
  BodyKind kind = BodyKind::Captor;
  std::string_view state;  // behaviour state, "failed", or the target policy
  Vec3 position = Vec3::Zero();  // world frame (x east, y north, z up)
  Vec3 velocity = Vec3::Zero();  // applied from this tick to the next
  bool has_fields = false;       // captors only: C_C / C_P valid
  double c_c = 0.0;
  double c_p = 0.0;
  bool has_pattern = false;
  bool fallback = false;
  double pattern_radius = 0.0;  // mean radius of the captor's pattern
};

struct TickLog {
  std::int64_t tick = 0;
  std::vector<BodySample> bodies;
};

struct CollisionEvent {
  std::int64_t tick = 0;
  int a = 0;
  int b = 0;
};

struct DetectionEvent {
  std::int64_t tick = 0;
  int observer = 0;
  Detection detection;
};

struct RunLog {
  std::string scenario;
  std::uint64_t seed = 0;
  double dt = 0.05;
  double safe_distance = 2.0;
  Calibration calibration;
  std::vector<TickLog> ticks;
  std::vector<CollisionEvent> collisions;
  std::vector<DetectionEvent> detections;
};

struct RunOptions {
  int threads = 1;
  int latency_ticks = 0;
  bool record_detections = true;
  // Called after each tick with the fields of captor `dump_agent`.
  std::function<void(std::int64_t, int, const GrnFrame&)> field_dump;
  int dump_agent = 0;
  // Returns true to stop after the given tick has been logged.
  std::function<bool(const TickLog&)> stop;
};

/// Approach-maneuver samples for every body kind in the scenario, under the
/// scenario's sensor noise.
inline std::vector<CalibrationSample> calibration_samples(const Scenario& s, std::uint64_t seed) {
  std::vector<CalibrationSample> samples;
  auto add = [&](BodyKind kind, double radius) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(kind), 0xCA11));
    NoiseModel n = s.noise;
    n.p_false = 0.0;
    n.range = std::max(n.range, 10.0);
    auto v = calibration_maneuver(s.rig, n, kind, radius, rng);
    samples.insert(samples.end(), v.begin(), v.end());
  };
  if (!s.captors.empty()) add(BodyKind::Captor, s.captors.front().radius);
  add(BodyKind::Target, s.targets.empty() ? 0.35 : s.targets.front().radius);
  if (!s.obstacles.empty()) add(BodyKind::Obstacle, s.obstacles.front().radius);
  return samples;
}

/// Power-law calibration of every body kind in the scenario.
inline Calibration calibrate_scenario(const Scenario& s, std::uint64_t seed) {
  return fit_calibration(calibration_samples(s, seed));
}

inline std::shared_ptr<AgentConfig> agent_config(const Scenario& s, const Calibration& cal) {
  auto cfg = std::make_shared<AgentConfig>();
  cfg->rig = s.rig;
  cfg->calibration = cal;
  cfg->y_mode = s.tuning.y_mode;
  cfg->grn = s.grn;
  cfg->scheme = s.scheme;
  cfg->motion.max_speed = s.captors.empty() ? 5.0 : s.captors.front().max_speed;
  cfg->motion.dt = s.dt;
  cfg->motion.k_scale = s.tuning.k_scale;
  cfg->motion.step_ref = s.tuning.step_ref;
  cfg->motion.step_deadband = s.tuning.step_deadband;
  cfg->motion.altitude_deadband = s.tuning.altitude_deadband;
  cfg->weights = s.tuning.weights;
  cfg->search = s.tuning.search;
  cfg->epsilon_c = s.tuning.epsilon_c;
  cfg->n_max = s.tuning.n_max;
  cfg->hold_altitude = s.tuning.hold_altitude;
  cfg->bounds = s.bounds;
  return cfg;
}

namespace detail {

struct TargetRuntime {
  std::size_t waypoint = 0;
};

inline Vec3 target_command(const Scenario& s, std::size_t idx, TargetRuntime& rt, const WorldState& w) {
  const TargetSpec& spec = s.targets[idx];
  const Body& body = *w.find(kTargetIdBase + static_cast<int>(idx));
  Vec3 v = Vec3::Zero();
  switch (spec.policy.kind) {
    case TargetPolicy::Kind::Static: break;
    case TargetPolicy::Kind::Waypoints: {
      if (w.tick < spec.policy.start_tick) break;
      while (rt.waypoint < spec.policy.waypoints.size()) {
        const Vec3 d = spec.policy.waypoints[rt.waypoint] - body.pose.position;
        if (d.norm() > 1e-9) {
          v = d.norm() <= spec.policy.speed * w.dt ? Vec3(d / w.dt) : Vec3(d.normalized() * spec.policy.speed);
          break;
        }
        ++rt.waypoint;
      }
      break;
    }
    case TargetPolicy::Kind::Evade: {
      std::vector<Vec3> captors;
      for (const auto& b : w.bodies)
        if (b.kind == BodyKind::Captor && !b.failed) captors.push_back(b.pose.position);
      v = evade_policy(body, captors, spec.policy.gain, spec.policy.trigger_radius);
      break;
    }
  }
  // Stay inside the arena.
  const Vec2 next = body.pose.position.head<2>() + v.head<2>() * w.dt;
  if (next.x() < s.bounds.min.x() || next.x() > s.bounds.max.x()) v.x() = 0.0;
  if (next.y() < s.bounds.min.y() || next.y() > s.bounds.max.y()) v.y() = 0.0;
  return v;
}

template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Runs the scenario with seed `seed`.
inline RunLog run(const Scenario& s, std::uint64_t seed, const RunOptions& opt = {}) {
  validate(s);
  RunLog log;
  log.scenario = s.name;
  log.seed = seed;
  log.dt = s.dt;
  log.safe_distance = s.grn.safe_distance;
  log.calibration = calibrate_scenario(s, seed);
  const auto cfg = agent_config(s, log.calibration);

  WorldState world = initial_world(s);
  std::vector<AgentState> agents;
  std::vector<Rng> perception;
  for (std::size_t i = 0; i < s.captors.size(); ++i) {
    agents.push_back(make_agent(static_cast<int>(i), cfg, s.captors[i].pose, derive_seed(seed, i, 2)));
    perception.emplace_back(derive_seed(seed, i, 1));
    agents.back().keep_frame = opt.field_dump && opt.dump_agent == static_cast<int>(i);
  }
  std::vector<detail::TargetRuntime> target_rt(s.targets.size());
  std::deque<WorldState> history;
  std::set<std::pair<int, int>> touching;

  for (std::int64_t t = 0; t < s.max_ticks; ++t) {
    for (const auto& f : s.failures)
      if (f.tick == t) world.find(f.captor)->failed = true;

    history.push_back(world);
    while (static_cast<int>(history.size()) > opt.latency_ticks + 1) history.pop_front();
    const WorldState& seen = history.front();

    std::vector<std::optional<MotionCommand>> cmds(agents.size());
    std::vector<std::vector<Detection>> dets(agents.size());
    detail::parallel_for(agents.size(), opt.threads, [&](std::size_t i) {
      const Body& self = *world.find(static_cast<int>(i));
      if (self.failed) return;
      dets[i] = sense(s.rig, *seen.find(static_cast<int>(i)), seen, s.noise, perception[i]);
      agents[i].pose = self.pose;
      cmds[i] = agent_step(agents[i], dets[i]);
    });

    std::map<int, Vec3> commands;
    for (std::size_t i = 0; i < agents.size(); ++i)
      if (cmds[i]) commands[static_cast<int>(i)] = local_vector_to_world(world.find(static_cast<int>(i))->pose.heading, cmds[i]->velocity);
    for (std::size_t k = 0; k < s.targets.size(); ++k)
      commands[kTargetIdBase + static_cast<int>(k)] = detail::target_command(s, k, target_rt[k], world);

    WorldState next = step_kinematics(world, commands);

    TickLog tl;
    tl.tick = t;
    for (const auto& b : world.bodies) {
      if (b.kind == BodyKind::Obstacle) continue;
      BodySample bs;
      bs.id = b.id;
      bs.kind = b.kind;
      bs.position = b.pose.position;
      bs.velocity = next.find(b.id)->velocity;
      if (b.kind == BodyKind::Captor) {
        const AgentState& a = agents[static_cast<std::size_t>(b.id)];
        bs.state = b.failed ? std::string_view("failed") : to_string(a.behavior.state);
        bs.has_fields = !b.failed;
        bs.c_c = a.c_c;
        bs.c_p = a.c_p;
        bs.has_pattern = !b.failed && a.pattern.has_value();
        bs.fallback = bs.has_pattern && a.pattern->fallback;
        bs.pattern_radius = bs.has_pattern ? a.pattern->mean_radius() : 0.0;
      } else {
        bs.state = to_string(s.targets[static_cast<std::size_t>(b.id - kTargetIdBase)].policy.kind);
      }
      tl.bodies.push_back(bs);
    }
    if (opt.record_detections)
      for (std::size_t i = 0; i < dets.size(); ++i)
        for (const auto& d : dets[i]) log.detections.push_back({t, static_cast<int>(i), d});
    if (opt.field_dump && opt.dump_agent >= 0 && opt.dump_agent < static_cast<int>(agents.size()) &&
        agents[static_cast<std::size_t>(opt.dump_agent)].frame)
      opt.field_dump(t, opt.dump_agent, *agents[static_cast<std::size_t>(opt.dump_agent)].frame);

    world = std::move(next);
    std::set<std::pair<int, int>> now;
    for (const auto& [a, b] : check_collisions(world)) {
      now.insert({a, b});
      if (!touching.count({a, b})) log.collisions.push_back({world.tick, a, b});
    }
    touching = std::move(now);

    log.ticks.push_back(std::move(tl));
    if (opt.stop && opt.stop(log.ticks.back())) break;
  }
  return log;
}

}  // namespace vgswarm
