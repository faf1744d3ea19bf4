#pragma once

#include "vgswarm/camera.hpp"
#include "vgswarm/estimation.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace vgswarm {

enum class RecordKind { Target, Obstacle, Neighbor };

inline RecordKind record_kind(BodyKind k) {
  switch (k) {
    case BodyKind::Target: return RecordKind::Target;
    case BodyKind::Obstacle: return RecordKind::Obstacle;
    case BodyKind::Captor: return RecordKind::Neighbor;
  }
  return RecordKind::Target;
}

/// One remembered object: [X, Y, Z, x, y, W, H, T, N] plus bookkeeping.
struct ObjectRecord {
  int id = 0;
  Vec3 position = Vec3::Zero();  // local frame, m
  BoundingBox box;               // last associated box (x, y, W, H)
  int camera_index = 0;
  RecordKind kind = RecordKind::Target;
  int lost = 0;  // N
  std::int64_t last_tick = 0;
  DepthFilter filter;
};

struct LocalMap {
  std::vector<ObjectRecord> records;
  int n_max = 10;
  int next_id = 0;
};

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

/// Associates this tick's detections (with their un-smoothed relative
/// positions) to the map. Matching is greedy on descending IoU among
/// same-kind, same-camera pairs with IoU > 0; ties go to the lower record id.
/// Matched records run their range filter and reset N; unmatched detections
/// spawn records; unmatched records age and are dropped once N > n_max.
inline LocalMap associate(LocalMap map, const std::vector<Detection>& detections,
                          const std::vector<RelPosition>& positions, double dt,
                          std::int64_t tick, const DepthFilter& filter_template = {}) {
  if (detections.size() != positions.size())
    throw std::invalid_argument("associate: detections and positions must align");

  struct Candidate {
    double iou;
    int record_id;
    std::size_t record_index;
    std::size_t detection_index;
  };
  std::vector<Candidate> cands;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const auto& det = detections[d];
    for (std::size_t r = 0; r < map.records.size(); ++r) {
      const auto& rec = map.records[r];
      if (rec.kind != record_kind(det.kind) || rec.camera_index != det.camera_index) continue;
      const double v = iou(rec.box, det.box);
      if (v > 0.0) cands.push_back({v, rec.id, r, d});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.record_id, a.detection_index) < std::tie(a.iou, b.record_id, b.detection_index);
  });

  std::vector<bool> rec_used(map.records.size(), false), det_used(detections.size(), false);
  auto update = [&](ObjectRecord& rec, std::size_t d) {
    const RelPosition& p = positions[d];
    rec.filter.r = range_proportional_r(p.distance);
    rec.filter = kalman_update(rec.filter, p.distance, dt);
    const double scale = p.distance > 0.0 ? rec.filter.state / p.distance : 1.0;
    rec.position = p.position * scale;
    rec.box = detections[d].box;
    rec.camera_index = detections[d].camera_index;
    rec.lost = 0;
    rec.last_tick = tick;
  };
  for (const auto& c : cands) {
    if (rec_used[c.record_index] || det_used[c.detection_index]) continue;
    rec_used[c.record_index] = det_used[c.detection_index] = true;
    update(map.records[c.record_index], c.detection_index);
  }

  std::vector<ObjectRecord> kept;
  kept.reserve(map.records.size() + detections.size());
  for (std::size_t r = 0; r < map.records.size(); ++r) {
    ObjectRecord rec = map.records[r];
    if (!rec_used[r]) {
      ++rec.lost;
      if (rec.lost > map.n_max) continue;
    }
    kept.push_back(rec);
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (det_used[d]) continue;
    ObjectRecord rec;
    rec.id = map.next_id++;
    rec.kind = record_kind(detections[d].kind);
    rec.filter = filter_template;
    rec.filter.initialized = false;
    update(rec, d);
    kept.push_back(rec);
  }
  map.records = std::move(kept);
  return map;
}

struct MapSnapshot {
  std::vector<Vec3> targets;
  std::vector<Vec3> obstacles;
  std::vector<Vec3> neighbors;
};

inline MapSnapshot snapshot(const LocalMap& map) {
  MapSnapshot s;
  for (const auto& r : map.records) {
    switch (r.kind) {
      case RecordKind::Target: s.targets.push_back(r.position); break;
      case RecordKind::Obstacle: s.obstacles.push_back(r.position); break;
      case RecordKind::Neighbor: s.neighbors.push_back(r.position); break;
    }
  }
  return s;
}

inline bool has_target(const LocalMap& map) {
  return std::any_of(map.records.begin(), map.records.end(),
                     [](const ObjectRecord& r) { return r.kind == RecordKind::Target; });
}

}  // namespace vgswarm
