#pragma once

// Scenario JSON files and run-log CSV output. Missing JSON keys keep their
// defaults, so a scenario file only needs the fields it changes. Logged
// positions and velocities are converted to NED (north, east, down).

#include "vgswarm/sim.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace vgswarm {

using Json = nlohmann::json;

namespace io_detail {

inline Json vec(const Vec2& v) { return Json::array({v.x(), v.y()}); }
inline Json vec(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec2 vec2(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(std::string(what) + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Vec3 vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(std::string(what) + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

/// Angles are written in radians; `<name>_deg` is accepted on input.
inline bool read_angle(const Json& j, const std::string& name, double& out) {
  if (auto it = j.find(name + "_rad"); it != j.end()) {
    out = it->get<double>();
    return true;
  }
  if (auto it = j.find(name + "_deg"); it != j.end()) {
    out = deg2rad(it->get<double>());
    return true;
  }
  return false;
}

inline Json pose(const Pose3& p) { return {{"position", vec(p.position)}, {"heading_rad", p.heading}}; }

inline Pose3 pose(const Json& j) {
  Pose3 p;
  if (auto it = j.find("position"); it != j.end()) p.position = vec3(*it, "position");
  if (double h = 0.0; read_angle(j, "heading", h)) p.heading = normalize_angle(h);
  return p;
}

inline TargetPolicy::Kind policy_kind(const std::string& s) {
  if (s == "static") return TargetPolicy::Kind::Static;
  if (s == "waypoints") return TargetPolicy::Kind::Waypoints;
  if (s == "evade") return TargetPolicy::Kind::Evade;
  throw ScenarioError("unknown target policy: " + s);
}

inline YMode y_mode(const std::string& s) {
  if (s == "planar") return YMode::Planar;
  if (s == "full") return YMode::Full;
  throw ScenarioError("unknown y_mode: " + s);
}

}  // namespace io_detail

inline Json to_json(const Scenario& s) {
  using namespace io_detail;
  Json j;
  j["name"] = s.name;
  j["dt"] = s.dt;
  j["max_ticks"] = s.max_ticks;
  j["seed"] = s.seed;
  j["bounds"] = {{"min", vec(s.bounds.min)}, {"max", vec(s.bounds.max)}};
  j["captors"] = Json::array();
  for (const auto& c : s.captors)
    j["captors"].push_back({{"pose", pose(c.pose)}, {"radius", c.radius}, {"max_speed", c.max_speed}});
  j["targets"] = Json::array();
  for (const auto& t : s.targets) {
    Json wp = Json::array();
    for (const auto& w : t.policy.waypoints) wp.push_back(vec(w));
    j["targets"].push_back({{"pose", pose(t.pose)},
                            {"radius", t.radius},
                            {"max_speed", t.max_speed},
                            {"policy",
                             {{"kind", std::string(to_string(t.policy.kind))},
                              {"waypoints", wp},
                              {"speed", t.policy.speed},
                              {"start_tick", t.policy.start_tick},
                              {"gain", t.policy.gain},
                              {"trigger_radius", t.policy.trigger_radius}}}});
  }
  j["obstacles"] = Json::array();
  for (const auto& o : s.obstacles)
    j["obstacles"].push_back({{"center", vec(o.center)}, {"radius", o.radius}, {"height", o.height}});
  j["failures"] = Json::array();
  for (const auto& f : s.failures) j["failures"].push_back({{"tick", f.tick}, {"captor", f.captor}});
  j["noise"] = {{"sigma_px", s.noise.sigma_px}, {"p_miss", s.noise.p_miss}, {"p_false", s.noise.p_false},
                {"range", s.noise.range}};
  const GrnParams& g = s.grn;
  j["grn"] = {{"theta", g.theta},
              {"k_sig", g.k_sig},
              {"source_amplitude", g.source_amplitude},
              {"obstacle_amplitude", g.obstacle_amplitude},
              {"neighbor_amplitude", g.neighbor_amplitude},
              {"pattern_radius", g.pattern_radius},
              {"obstacle_reach", g.obstacle_reach},
              {"neighbor_reach", g.neighbor_reach},
              {"safe_distance", g.safe_distance},
              {"solver_tol", g.solver_tol},
              {"max_iters", g.max_iters},
              {"level_step", g.level_step},
              {"quadrant_min", g.quadrant_min},
              {"quadrant_max", g.quadrant_max},
              {"contour_points", g.contour_points},
              {"h", g.h},
              {"grid_nodes", g.grid_nodes}};
  j["sampling"] = {{"radii", s.scheme.radii}, {"n_directions", s.scheme.n_directions}};
  j["camera"] = {{"mount_yaw_rad", {s.rig.mount_yaw[0], s.rig.mount_yaw[1], s.rig.mount_yaw[2], s.rig.mount_yaw[3]}},
                 {"fov_h_rad", s.rig.fov_h},
                 {"fov_v_rad", s.rig.fov_v},
                 {"width", s.rig.width},
                 {"height", s.rig.height},
                 {"rate_hz", s.rig.rate_hz}};
  const CaptorTuning& t = s.tuning;
  j["tuning"] = {{"search",
                  {{"turn_sigma_rad", t.search.turn_sigma},
                   {"persistence", t.search.persistence},
                   {"avoid_radius", t.search.avoid_radius},
                   {"avoid_turn_rad", t.search.avoid_turn}}},
                 {"weights", {{"obstacle", t.weights.obstacle}, {"neighbor", t.weights.neighbor}, {"inside", t.weights.inside}}},
                 {"step_ref", t.step_ref},
                 {"step_deadband", t.step_deadband},
                 {"altitude_deadband", t.altitude_deadband},
                 {"k_scale", t.k_scale},
                 {"epsilon_c", t.epsilon_c},
                 {"n_max", t.n_max},
                 {"y_mode", t.y_mode == YMode::Planar ? "planar" : "full"},
                 {"hold_altitude", t.hold_altitude}};
  return j;
}

/// Parses a scenario; throws ScenarioError on malformed input.
inline Scenario scenario_from_json(const Json& j) {
  using namespace io_detail;
  if (!j.is_object()) throw ScenarioError("scenario: expected a JSON object");
  Scenario s;
  try {
    read(j, "name", s.name);
    read(j, "dt", s.dt);
    read(j, "max_ticks", s.max_ticks);
    read(j, "seed", s.seed);
    if (auto it = j.find("bounds"); it != j.end()) {
      s.bounds.min = vec2(it->at("min"), "bounds.min");
      s.bounds.max = vec2(it->at("max"), "bounds.max");
    }
    for (const auto& c : j.value("captors", Json::array())) {
      CaptorSpec cs;
      if (auto it = c.find("pose"); it != c.end()) cs.pose = pose(*it);
      read(c, "radius", cs.radius);
      read(c, "max_speed", cs.max_speed);
      s.captors.push_back(cs);
    }
    for (const auto& t : j.value("targets", Json::array())) {
      TargetSpec ts;
      if (auto it = t.find("pose"); it != t.end()) ts.pose = pose(*it);
      read(t, "radius", ts.radius);
      read(t, "max_speed", ts.max_speed);
      if (auto it = t.find("policy"); it != t.end()) {
        const Json& p = *it;
        if (auto k = p.find("kind"); k != p.end()) ts.policy.kind = policy_kind(k->get<std::string>());
        for (const auto& w : p.value("waypoints", Json::array())) ts.policy.waypoints.push_back(vec3(w, "waypoint"));
        read(p, "speed", ts.policy.speed);
        read(p, "start_tick", ts.policy.start_tick);
        read(p, "gain", ts.policy.gain);
        read(p, "trigger_radius", ts.policy.trigger_radius);
      }
      s.targets.push_back(ts);
    }
    for (const auto& o : j.value("obstacles", Json::array())) {
      ObstacleSpec os;
      os.center = vec2(o.at("center"), "obstacle center");
      read(o, "radius", os.radius);
      read(o, "height", os.height);
      s.obstacles.push_back(os);
    }
    for (const auto& f : j.value("failures", Json::array())) s.failures.push_back({f.at("tick").get<std::int64_t>(), f.at("captor").get<int>()});
    if (auto it = j.find("noise"); it != j.end()) {
      read(*it, "sigma_px", s.noise.sigma_px);
      read(*it, "p_miss", s.noise.p_miss);
      read(*it, "p_false", s.noise.p_false);
      read(*it, "range", s.noise.range);
    }
    if (auto it = j.find("grn"); it != j.end()) {
      GrnParams& g = s.grn;
      const Json& q = *it;
      read(q, "theta", g.theta);
      read(q, "k_sig", g.k_sig);
      read(q, "source_amplitude", g.source_amplitude);
      read(q, "obstacle_amplitude", g.obstacle_amplitude);
      read(q, "neighbor_amplitude", g.neighbor_amplitude);
      read(q, "pattern_radius", g.pattern_radius);
      read(q, "obstacle_reach", g.obstacle_reach);
      read(q, "neighbor_reach", g.neighbor_reach);
      read(q, "safe_distance", g.safe_distance);
      read(q, "solver_tol", g.solver_tol);
      read(q, "max_iters", g.max_iters);
      read(q, "level_step", g.level_step);
      read(q, "quadrant_min", g.quadrant_min);
      read(q, "quadrant_max", g.quadrant_max);
      read(q, "contour_points", g.contour_points);
      read(q, "h", g.h);
      read(q, "grid_nodes", g.grid_nodes);
    }
    if (auto it = j.find("sampling"); it != j.end()) {
      read(*it, "radii", s.scheme.radii);
      read(*it, "n_directions", s.scheme.n_directions);
    }
    if (auto it = j.find("camera"); it != j.end()) {
      const Json& c = *it;
      for (const char* unit : {"_rad", "_deg"}) {
        const auto m = c.find(std::string("mount_yaw") + unit);
        if (m == c.end()) continue;
        if (!m->is_array() || m->size() != 4) throw ScenarioError(std::string("camera.mount_yaw") + unit + ": expected 4 angles");
        for (std::size_t k = 0; k < 4; ++k) {
          const double a = (*m)[k].get<double>();
          s.rig.mount_yaw[k] = unit[1] == 'r' ? a : deg2rad(a);
        }
        break;
      }
      read_angle(c, "fov_h", s.rig.fov_h);
      read_angle(c, "fov_v", s.rig.fov_v);
      read(c, "width", s.rig.width);
      read(c, "height", s.rig.height);
      read(c, "rate_hz", s.rig.rate_hz);
    }
    if (auto it = j.find("tuning"); it != j.end()) {
      CaptorTuning& t = s.tuning;
      const Json& q = *it;
      if (auto sp = q.find("search"); sp != q.end()) {
        read_angle(*sp, "turn_sigma", t.search.turn_sigma);
        read(*sp, "persistence", t.search.persistence);
        read(*sp, "avoid_radius", t.search.avoid_radius);
        read_angle(*sp, "avoid_turn", t.search.avoid_turn);
      }
      if (auto w = q.find("weights"); w != q.end()) {
        read(*w, "obstacle", t.weights.obstacle);
        read(*w, "neighbor", t.weights.neighbor);
        read(*w, "inside", t.weights.inside);
      }
      read(q, "step_ref", t.step_ref);
      read(q, "step_deadband", t.step_deadband);
      read(q, "altitude_deadband", t.altitude_deadband);
      read(q, "k_scale", t.k_scale);
      read(q, "epsilon_c", t.epsilon_c);
      read(q, "n_max", t.n_max);
      if (auto y = q.find("y_mode"); y != q.end()) t.y_mode = y_mode(y->get<std::string>());
      read(q, "hold_altitude", t.hold_altitude);
    }
  } catch (const Json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ScenarioError(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file: " + path);
  out << to_json(s).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// CSV

namespace io_detail {

struct Precise {
  explicit Precise(std::ostream& os) : os_(os), flags_(os.flags()), prec_(os.precision()) {
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
  }
  ~Precise() {
    os_.flags(flags_);
    os_.precision(prec_);
  }
  Precise(const Precise&) = delete;
  Precise& operator=(const Precise&) = delete;

 private:
  std::ostream& os_;
  std::ios::fmtflags flags_;
  std::streamsize prec_;
};

}  // namespace io_detail

/// tick, body_id, kind, state, x, y, z, vx, vy, vz, C_C, C_P with x north,
/// y east, z down. C_C and C_P are empty for bodies without fields.
inline void write_runlog_csv(std::ostream& os, const RunLog& log) {
  io_detail::Precise p(os);
  os << "tick,body_id,kind,state,x,y,z,vx,vy,vz,C_C,C_P\n";
  for (const auto& t : log.ticks) {
    for (const auto& b : t.bodies) {
      // Adding 0.0 turns -0 into 0 so the text does not depend on zero signs.
      const Vec3 x = to_ned(b.position) + Vec3::Zero();
      const Vec3 v = to_ned(b.velocity) + Vec3::Zero();
      os << t.tick << ',' << b.id << ',' << to_string(b.kind) << ',' << b.state << ',' << x.x() << ',' << x.y() << ','
         << x.z() << ',' << v.x() << ',' << v.y() << ',' << v.z() << ',';
      if (b.has_fields) os << b.c_c << ',' << b.c_p;
      else os << ',';
      os << '\n';
    }
  }
}

inline void write_collisions_csv(std::ostream& os, const RunLog& log) {
  os << "tick,body_a,body_b\n";
  for (const auto& c : log.collisions) os << c.tick << ',' << c.a << ',' << c.b << '\n';
}

inline void write_detections_csv(std::ostream& os, const RunLog& log) {
  io_detail::Precise p(os);
  os << "tick,observer,camera,kind,source_id,cx,cy,w,h,truncated\n";
  for (const auto& e : log.detections) {
    const auto& d = e.detection;
    os << e.tick << ',' << e.observer << ',' << d.camera_index << ',' << to_string(d.kind) << ',' << d.source_id << ','
       << d.box.cx << ',' << d.box.cy << ',' << d.box.w << ',' << d.box.h << ',' << (d.truncated ? 1 : 0) << '\n';
  }
}

inline void write_fit_csv(std::ostream& os, const Calibration& cal) {
  io_detail::Precise p(os);
  os << "kind,alpha,beta,rmse\n";
  for (const auto& [kind, f] : cal.fits) os << to_string(kind) << ',' << f.alpha << ',' << f.beta << ',' << f.rmse << '\n';
}

inline std::string to_csv_string(void (*writer)(std::ostream&, const RunLog&), const RunLog& log) {
  std::ostringstream os;
  writer(os, log);
  return os.str();
}

}  // namespace vgswarm
