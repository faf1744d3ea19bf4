#pragma once

// Synthetic four-camera perception. Bodies are projected with the same
// FOV-sine mapping the estimator inverts:
//
//   cx = W * X / (2 D sin(fov_h / 2)),  cy = H * Z / (2 D sin(fov_v / 2))
//
// with (X, Y, Z) the body centre in the camera frame (X right, Y forward,
// Z up) and D its range. Box extents map the body's diameter through the
// same scale, so the box area falls off exactly as D^-2.

#include "vgswarm/common.hpp"
#include "vgswarm/rng.hpp"
#include "vgswarm/world.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vgswarm {

struct CameraRig {
  std::array<double, 4> mount_yaw{0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};
  double fov_h = deg2rad(120.0);
  double fov_v = deg2rad(90.0);
  int width = 640;
  int height = 480;
  double rate_hz = 20.0;

  void validate() const {
    if (!(fov_h > 0.0 && fov_h < kPi) || !(fov_v > 0.0 && fov_v < kPi))
      throw std::invalid_argument("CameraRig: FOV must lie in (0, pi)");
    if (width <= 0 || height <= 0) throw std::invalid_argument("CameraRig: bad image size");
  }

  double half_width() const { return 0.5 * width; }
  double half_height() const { return 0.5 * height; }
  // Pixels per unit of X/D (horizontal) and Z/D (vertical).
  double scale_h() const { return width / (2.0 * std::sin(0.5 * fov_h)); }
  double scale_v() const { return height / (2.0 * std::sin(0.5 * fov_v)); }
};

struct NoiseModel {
  double sigma_px = 2.0;
  double p_miss = 0.05;
  double p_false = 0.0;  // per camera per frame
  double range = 10.0;

  static NoiseModel ideal(double range = 10.0) { return {0.0, 0.0, 0.0, range}; }
};

/// Axis-aligned box in image coordinates centred on the principal point
/// (x right, y up), pixels.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double bottom() const { return cy - 0.5 * h; }
  double top() const { return cy + 0.5 * h; }
};

struct Detection {
  int camera_index = 0;
  BoundingBox box;
  BodyKind kind = BodyKind::Target;
  std::int64_t tick = 0;
  bool truncated = false;  // box was clipped by the image border
  int source_id = -1;      // ground-truth body id (diagnostics only); -1 = false positive

  double area() const { return box.area(); }
};

// Camera-frame axes of camera `cam` expressed in the body-local x/y plane.
inline Vec2 camera_forward(const CameraRig& rig, int cam) {
  const double mu = rig.mount_yaw.at(static_cast<std::size_t>(cam));
  return {std::sin(mu), std::cos(mu)};
}
inline Vec2 camera_right(const CameraRig& rig, int cam) {
  const double mu = rig.mount_yaw.at(static_cast<std::size_t>(cam));
  return {std::cos(mu), -std::sin(mu)};
}

inline Vec3 local_to_camera(const CameraRig& rig, int cam, const Vec3& local) {
  const Vec2 f = camera_forward(rig, cam);
  const Vec2 r = camera_right(rig, cam);
  return {local.x() * r.x() + local.y() * r.y(), local.x() * f.x() + local.y() * f.y(), local.z()};
}

inline Vec3 camera_to_local(const CameraRig& rig, int cam, const Vec3& c) {
  const Vec2 f = camera_forward(rig, cam);
  const Vec2 r = camera_right(rig, cam);
  return {c.x() * r.x() + c.y() * f.x(), c.x() * r.y() + c.y() * f.y(), c.z()};
}

/// Point used as the visual centre of a body from a given observer. For
/// cylinders this is the axis point at the observer's altitude, clamped to
/// the cylinder's extent.
inline Vec3 visual_center(const Body& body, const Pose3& observer) {
  if (body.kind != BodyKind::Obstacle) return body.pose.position;
  const double base = body.pose.position.z();
  const double z = std::clamp(observer.position.z(), base, base + body.height);
  return {body.pose.position.x(), body.pose.position.y(), z};
}

/// Noise-free box of `body` in camera `cam`, before clipping. Empty when the
/// body is behind the camera, outside the field of view or out of range.
inline std::optional<BoundingBox> ideal_box(const CameraRig& rig, int cam, const Pose3& observer,
                                            const Body& body, double range) {
  const Vec3 local = world_to_local(observer, visual_center(body, observer));
  const Vec3 c = local_to_camera(rig, cam, local);
  const double d = c.norm();
  if (c.y() <= 0.0 || d > range || d <= body.radius) return std::nullopt;
  BoundingBox box;
  box.cx = rig.scale_h() * c.x() / d;
  box.cy = rig.scale_v() * c.z() / d;
  if (std::abs(box.cx) > rig.half_width() || std::abs(box.cy) > rig.half_height())
    return std::nullopt;
  box.w = 2.0 * rig.scale_h() * body.radius / d;
  box.h = 2.0 * rig.scale_v() * body.radius / d;
  return box;
}

// Clips a box to the image; returns false when less than a pixel remains.
inline bool clip_to_image(const CameraRig& rig, BoundingBox& box, bool& truncated) {
  const double l = std::max(box.left(), -rig.half_width());
  const double r = std::min(box.right(), rig.half_width());
  const double b = std::max(box.bottom(), -rig.half_height());
  const double t = std::min(box.top(), rig.half_height());
  truncated = l > box.left() || r < box.right() || b > box.bottom() || t < box.top();
  if (r - l < 1.0 || t - b < 1.0) return false;
  box = {0.5 * (l + r), 0.5 * (b + t), r - l, t - b};
  return true;
}

/// Rebuilds a box clipped along one image axis from its unclipped extent,
/// using the fixed box aspect scale_h / scale_v of a round body. Empty when
/// both axes are clipped or both edges of one axis are.
inline std::optional<BoundingBox> restore_truncated(const CameraRig& rig, const BoundingBox& box, double tol = 0.5) {
  const bool at_l = box.left() <= -rig.half_width() + tol, at_r = box.right() >= rig.half_width() - tol;
  const bool at_b = box.bottom() <= -rig.half_height() + tol, at_t = box.top() >= rig.half_height() - tol;
  const bool h_clip = at_l || at_r, v_clip = at_b || at_t;
  if ((h_clip && v_clip) || (at_l && at_r) || (at_b && at_t)) return std::nullopt;
  BoundingBox out = box;
  const double aspect = rig.scale_h() / rig.scale_v();
  if (h_clip) {
    out.w = std::max(box.w, box.h * aspect);
    out.cx = at_r ? box.left() + 0.5 * out.w : box.right() - 0.5 * out.w;
  } else if (v_clip) {
    out.h = std::max(box.h, box.w / aspect);
    out.cy = at_t ? box.bottom() + 0.5 * out.h : box.top() - 0.5 * out.h;
  }
  out.cx = std::clamp(out.cx, -rig.half_width(), rig.half_width());
  out.cy = std::clamp(out.cy, -rig.half_height(), rig.half_height());
  return out;
}

/// One camera's detection of one body, with pixel noise and misses.
inline std::optional<Detection> project(const CameraRig& rig, int cam, const Pose3& observer,
                                        const Body& body, const NoiseModel& noise, Rng& rng,
                                        std::int64_t tick = 0) {
  auto ideal = ideal_box(rig, cam, observer, body, noise.range);
  if (!ideal) return std::nullopt;
  BoundingBox box = *ideal;
  if (noise.sigma_px > 0.0) {
    box.cx += rng.normal(0.0, noise.sigma_px);
    box.cy += rng.normal(0.0, noise.sigma_px);
    box.w = std::max(1.0, box.w + rng.normal(0.0, noise.sigma_px));
    box.h = std::max(1.0, box.h + rng.normal(0.0, noise.sigma_px));
  }
  if (rng.bernoulli(noise.p_miss)) return std::nullopt;
  Detection det;
  det.camera_index = cam;
  det.kind = body.kind;
  det.tick = tick;
  det.source_id = body.id;
  if (!clip_to_image(rig, box, det.truncated)) return std::nullopt;
  det.box = box;
  return det;
}

/// True when an obstacle cylinder other than `skip_id` crosses the segment
/// from `from` to `to`.
inline bool occluded(const WorldState& world, const Vec3& from, const Vec3& to, int skip_id) {
  const Vec2 a{from.x(), from.y()};
  const Vec2 ab = Vec2{to.x(), to.y()} - a;
  const double len2 = ab.squaredNorm();
  for (const auto& b : world.bodies) {
    if (b.kind != BodyKind::Obstacle || b.id == skip_id) continue;
    const Vec2 c{b.pose.position.x(), b.pose.position.y()};
    const double t = len2 > 0.0 ? std::clamp((c - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    if ((a + t * ab - c).norm() >= b.radius) continue;
    const double z = from.z() + t * (to.z() - from.z());
    if (z >= b.pose.position.z() && z <= b.pose.position.z() + b.height) return true;
  }
  return false;
}

/// All detections seen by `observer` this tick, ordered by (camera, body id);
/// false positives, if enabled, follow the true detections of each camera.
inline std::vector<Detection> sense(const CameraRig& rig, const Body& observer,
                                    const WorldState& world, const NoiseModel& noise, Rng& rng) {
  std::vector<const Body*> others;
  for (const auto& b : world.bodies)
    if (b.id != observer.id) others.push_back(&b);
  std::sort(others.begin(), others.end(), [](const Body* x, const Body* y) { return x->id < y->id; });

  std::vector<bool> visible(others.size(), false);
  for (std::size_t i = 0; i < others.size(); ++i) {
    const Body& b = *others[i];
    const Vec3 target = visual_center(b, observer.pose);
    if ((target - observer.pose.position).norm() > noise.range) continue;
    visible[i] = !occluded(world, observer.pose.position, target, b.id);
  }

  std::vector<Detection> out;
  for (int cam = 0; cam < 4; ++cam) {
    for (std::size_t i = 0; i < others.size(); ++i) {
      if (!visible[i]) continue;
      if (auto det = project(rig, cam, observer.pose, *others[i], noise, rng, world.tick))
        out.push_back(*det);
    }
    if (rng.bernoulli(noise.p_false)) {
      Detection fp;
      fp.camera_index = cam;
      fp.tick = world.tick;
      fp.kind = static_cast<BodyKind>(static_cast<int>(rng.uniform() * 3.0) % 3);
      fp.box.w = rng.uniform(8.0, 80.0);
      fp.box.h = rng.uniform(8.0, 80.0);
      fp.box.cx = rng.uniform(-rig.half_width(), rig.half_width());
      fp.box.cy = rng.uniform(-rig.half_height(), rig.half_height());
      if (clip_to_image(rig, fp.box, fp.truncated)) out.push_back(fp);
    }
  }
  return out;
}

}  // namespace vgswarm
