#pragma once

// Entrapment evaluation over run logs: ring distance error, the three-sector
// success test, average speed and success-rate tables.

#include "vgswarm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace vgswarm {

/// Mean of | planar distance to target - R | over the captors.
inline double distance_error(const std::vector<Vec3>& captors, const Vec3& target, double ring_radius) {
  if (captors.empty()) throw std::invalid_argument("distance_error: need at least one captor");
  double s = 0.0;
  for (const auto& c : captors) s += std::abs((c - target).head<2>().norm() - ring_radius);
  return s / static_cast<double>(captors.size());
}

struct CaptorSnapshot {
  Vec3 position = Vec3::Zero();
  double speed = 0.0;  // planar, m/s
};

struct SuccessCriteria {
  double band = 0.5;        // ring error, m
  double stop_speed = 0.5;  // planar speed, m/s
  int min_per_sector = 1;   // 2 with --strict-success
  double sector_origin = 0.0;  // bearing of sector 0's start, rad (compass)
};

/// Sector (0, 1, 2) of compass bearing `b` measured from `origin`. A
/// bearing within rounding of a sector start belongs to that sector.
inline int sector_of(double bearing, double origin) {
  const int s = static_cast<int>(wrap_two_pi(bearing - origin) / (kTwoPi / 3.0) + 1e-9);
  return std::min(s, 2);
}

/// True when each of the three 120-degree sectors around the target holds
/// enough captors that are on the ring and stopped.
inline bool is_success(const std::vector<CaptorSnapshot>& captors, const Vec3& target, double ring_radius,
                       const SuccessCriteria& c = {}) {
  int count[3] = {0, 0, 0};
  for (const auto& k : captors) {
    const Vec2 d = (k.position - target).head<2>();
    if (std::abs(d.norm() - ring_radius) > c.band || k.speed > c.stop_speed) continue;
    ++count[sector_of(std::atan2(d.x(), d.y()), c.sector_origin)];
  }
  return count[0] >= c.min_per_sector && count[1] >= c.min_per_sector && count[2] >= c.min_per_sector;
}

struct EntrapmentReport {
  std::vector<std::int64_t> ticks;
  std::vector<double> d_bar;
  std::map<int, std::vector<double>> d_i;
  std::vector<double> ring_radius;
  std::vector<bool> success;
  std::vector<bool> target_moving;
  std::optional<std::int64_t> success_tick;
  std::optional<std::int64_t> detect_tick;  // first captor out of searching
  double avg_speed = 0.0;
  double mean_dbar_after_success = 0.0;
  int collisions = 0;  // captor-captor and captor-obstacle contact onsets
};

inline double ring_radius_at(const TickLog& t, double safe_distance) {
  double s = 0.0;
  int n = 0;
  for (const auto& b : t.bodies)
    if (b.kind == BodyKind::Captor && b.has_pattern && !b.fallback) {
      s += b.pattern_radius;
      ++n;
    }
  return n > 0 ? s / n : safe_distance;
}

inline bool is_captor_searching(std::string_view state) { return state == "init" || state == "searching"; }

/// Evaluates a run against its first target.
inline EntrapmentReport evaluate(const RunLog& log, const SuccessCriteria& c = {}) {
  EntrapmentReport r;
  for (const auto& e : log.collisions) {
    const bool a_captor = e.a < kTargetIdBase, b_captor = e.b < kTargetIdBase;
    const bool a_obs = e.a >= kObstacleIdBase, b_obs = e.b >= kObstacleIdBase;
    if ((a_captor && (b_captor || b_obs)) || (b_captor && a_obs)) ++r.collisions;
  }
  for (const auto& t : log.ticks) {
    const BodySample* target = nullptr;
    std::vector<Vec3> pos;
    std::vector<CaptorSnapshot> snaps;
    for (const auto& b : t.bodies) {
      if (b.kind == BodyKind::Target && b.id == kTargetIdBase) target = &b;
      if (b.kind != BodyKind::Captor || b.state == "failed") continue;
      pos.push_back(b.position);
      snaps.push_back({b.position, b.velocity.head<2>().norm()});
      if (!r.detect_tick && !is_captor_searching(b.state)) r.detect_tick = t.tick;
    }
    if (target == nullptr || pos.empty()) continue;
    const double ring = ring_radius_at(t, log.safe_distance);
    r.ticks.push_back(t.tick);
    r.ring_radius.push_back(ring);
    r.d_bar.push_back(distance_error(pos, target->position, ring));
    for (const auto& b : t.bodies)
      if (b.kind == BodyKind::Captor && b.state != "failed")
        r.d_i[b.id].push_back(std::abs((b.position - target->position).head<2>().norm() - ring));
    const bool ok = is_success(snaps, target->position, ring, c);
    r.success.push_back(ok);
    r.target_moving.push_back(target->velocity.norm() > 1e-9);
    if (ok && !r.success_tick) r.success_tick = t.tick;
  }

  // Average captor speed from first detection to success (or to the end).
  if (r.detect_tick) {
    const std::int64_t end = r.success_tick ? *r.success_tick : std::numeric_limits<std::int64_t>::max();
    double s = 0.0;
    long n = 0;
    for (const auto& t : log.ticks) {
      if (t.tick < *r.detect_tick || t.tick > end) continue;
      for (const auto& b : t.bodies)
        if (b.kind == BodyKind::Captor && b.state != "failed") {
          s += b.velocity.norm();
          ++n;
        }
    }
    r.avg_speed = n > 0 ? s / n : 0.0;
  }
  if (r.success_tick) {
    double s = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < r.ticks.size(); ++k)
      if (r.ticks[k] >= *r.success_tick) {
        s += r.d_bar[k];
        ++n;
      }
    r.mean_dbar_after_success = n > 0 ? s / n : 0.0;
  }
  return r;
}

/// Fraction of post-success ticks with a static target where d_bar <= limit.
inline double fraction_dbar_within(const EntrapmentReport& r, double limit) {
  if (!r.success_tick) return 0.0;
  int n = 0, ok = 0;
  for (std::size_t k = 0; k < r.ticks.size(); ++k) {
    if (r.ticks[k] < *r.success_tick || r.target_moving[k]) continue;
    ++n;
    if (r.d_bar[k] <= limit) ++ok;
  }
  return n > 0 ? static_cast<double>(ok) / n : 1.0;
}

// ---------------------------------------------------------------------------
// Tables

struct RunSummary {
  std::string run_id;
  std::uint64_t seed = 0;
  double initial_distance = 0.0;
  double dt = 0.05;
  EntrapmentReport report;
};

struct TableRow {
  double initial_distance = 0.0;
  std::vector<double> rates;  // percent, one per checkpoint
  double avg_speed = 0.0;     // mean over successful runs
  int runs = 0;
};

/// Success rate per checkpoint (seconds) for each initial distance, in
/// order of first appearance.
inline std::vector<TableRow> summarize(const std::vector<RunSummary>& runs, const std::vector<double>& checkpoints) {
  std::vector<TableRow> rows;
  for (const auto& run : runs) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const TableRow& r) { return r.initial_distance == run.initial_distance; });
    if (it == rows.end()) {
      rows.push_back({run.initial_distance, std::vector<double>(checkpoints.size(), 0.0), 0.0, 0});
      it = rows.end() - 1;
    }
    ++it->runs;
  }
  for (auto& row : rows) {
    int ok = 0;
    double speed = 0.0;
    for (const auto& run : runs) {
      if (run.initial_distance != row.initial_distance) continue;
      const auto& st = run.report.success_tick;
      for (std::size_t c = 0; c < checkpoints.size(); ++c)
        if (st && *st * run.dt <= checkpoints[c] + 1e-9) row.rates[c] += 1.0;
      if (st) {
        ++ok;
        speed += run.report.avg_speed;
      }
    }
    for (auto& v : row.rates) v = 100.0 * v / row.runs;
    row.avg_speed = ok > 0 ? speed / ok : 0.0;
  }
  return rows;
}

inline std::string checkpoint_label(double seconds) {
  std::ostringstream os;
  os << "rate_at_" << seconds << "s";
  return os.str();
}

inline void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows, const std::vector<double>& checkpoints) {
  os << "initial_distance_m";
  for (double c : checkpoints) os << ',' << checkpoint_label(c);
  os << ",avg_speed_mps\n";
  for (const auto& r : rows) {
    os << r.initial_distance;
    for (double v : r.rates) os << ',' << v;
    os << ',' << std::setprecision(4) << r.avg_speed << std::setprecision(6) << '\n';
  }
}

inline void write_report_csv(std::ostream& os, const std::vector<RunSummary>& runs) {
  os << "run_id,seed,success_tick,avg_speed_mps,mean_dbar_after_success,collisions\n";
  for (const auto& r : runs) {
    os << r.run_id << ',' << r.seed << ',';
    if (r.report.success_tick) os << *r.report.success_tick;
    os << ',' << std::setprecision(6) << r.report.avg_speed << ',' << r.report.mean_dbar_after_success << ','
       << r.report.collisions << '\n';
  }
}

/// Trajectories in NED plus the d_bar series, one row per body per tick.
inline void write_plotdata_csv(std::ostream& os, const RunLog& log, const EntrapmentReport& r) {
  std::map<std::int64_t, double> dbar;
  for (std::size_t k = 0; k < r.ticks.size(); ++k) dbar[r.ticks[k]] = r.d_bar[k];
  os << "tick,time_s,body_id,kind,north_m,east_m,down_m,d_bar_m\n" << std::setprecision(8);
  for (const auto& t : log.ticks) {
    for (const auto& b : t.bodies) {
      const Vec3 ned = to_ned(b.position);
      os << t.tick << ',' << t.tick * log.dt << ',' << b.id << ',' << to_string(b.kind) << ',' << ned.x() << ','
         << ned.y() << ',' << ned.z() << ',';
      if (auto it = dbar.find(t.tick); it != dbar.end()) os << it->second;
      os << '\n';
    }
  }
}

}  // namespace vgswarm
