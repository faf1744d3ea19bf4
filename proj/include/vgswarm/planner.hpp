#pragma once

// Lower layer: sample candidate directions on concentric circles around the
// agent, take the direction with the smallest summed field value, and turn
// it into a velocity command.

#include "vgswarm/field.hpp"
#include "vgswarm/grn.hpp"
#include "vgswarm/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vgswarm {

struct SamplingScheme {
  std::vector<double> radii{0.5, 1.1, 1.7, 2.3, 2.9};
  int n_directions = 180;

  void validate() const {
    if (radii.empty() || !(radii.front() > 0.0)) throw std::invalid_argument("SamplingScheme: radii must be positive");
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("SamplingScheme: radii must increase");
    if (n_directions < 8) throw std::invalid_argument("SamplingScheme: need at least 8 directions");
  }

  /// Ray angle of direction d, from local +Y toward +X.
  double angle(int d) const { return kTwoPi * d / n_directions; }
};

/// Sample point on ray `theta` at distance r (local frame, relative to the agent).
inline Vec2 ray_point(double theta, double r) { return {r * std::sin(theta), r * std::cos(theta)}; }

/// Sum of the samples along each ray. `field` maps an agent-relative point
/// to a value.
template <class Field>
std::vector<double> direction_sums(const Field& field, const SamplingScheme& scheme) {
  std::vector<double> sums(static_cast<std::size_t>(scheme.n_directions), 0.0);
  for (int d = 0; d < scheme.n_directions; ++d) {
    const double th = scheme.angle(d);
    for (double r : scheme.radii) sums[static_cast<std::size_t>(d)] += field(ray_point(th, r));
  }
  return sums;
}

/// Index of the smallest sum; sums equal to within rounding count as ties
/// and go to the smallest angle.
inline int argmin_direction(const std::vector<double>& sums) {
  int best = 0;
  for (int d = 1; d < static_cast<int>(sums.size()); ++d) {
    const double tol = 1e-12 * std::max(1.0, std::abs(sums[static_cast<std::size_t>(best)]));
    if (sums[static_cast<std::size_t>(d)] < sums[static_cast<std::size_t>(best)] - tol) best = d;
  }
  return best;
}

template <class Field>
double select_direction(const Field& field, const SamplingScheme& scheme) {
  return scheme.angle(argmin_direction(direction_sums(field, scheme)));
}

/// Field-grid overload: rays start at the grid centre (the agent).
inline double select_direction(const FieldGrid& m, const SamplingScheme& scheme) {
  const Vec2 c = m.geom.center();
  return select_direction([&](const Vec2& q) { return concentration_at(m, c + q); }, scheme);
}

// ---------------------------------------------------------------------------
// Planning field

/// Pattern radius as a function of bearing about the target, from a 360-bin
/// table built off the contour.
class RadialProfile {
 public:
  static constexpr int kBins = 360;

  RadialProfile() = default;
  explicit RadialProfile(const EntrapPattern& p) : target_(p.target), radius_(kBins, -1.0) {
    for (const auto& q : p.contour) {
      const Vec2 d = q - p.target;
      const int b = bin(std::atan2(d.x(), d.y()));
      const double r = d.norm();
      double& slot = radius_[static_cast<std::size_t>(b)];
      slot = slot < 0.0 ? r : std::min(slot, r);
    }
    // Fill empty bins by circular linear interpolation.
    std::vector<int> filled;
    for (int b = 0; b < kBins; ++b)
      if (radius_[static_cast<std::size_t>(b)] >= 0.0) filled.push_back(b);
    if (filled.empty()) throw std::invalid_argument("RadialProfile: empty contour");
    for (std::size_t k = 0; k < filled.size(); ++k) {
      const int a = filled[k];
      const int b = filled[(k + 1) % filled.size()];
      const int gap = (b - a + kBins) % kBins == 0 ? kBins : (b - a + kBins) % kBins;
      const double ra = radius_[static_cast<std::size_t>(a)], rb = radius_[static_cast<std::size_t>(b)];
      for (int s = 1; s < gap; ++s)
        radius_[static_cast<std::size_t>((a + s) % kBins)] = ra + (rb - ra) * s / gap;
    }
  }

  const Vec2& target() const { return target_; }

  /// Pattern radius along compass-style bearing atan2(dx, dy) about the target.
  double radius_at(double bearing) const {
    const double f = wrap_two_pi(bearing) / kTwoPi * kBins;
    const int i = static_cast<int>(f) % kBins;
    const double t = f - std::floor(f);
    return (1.0 - t) * radius_[static_cast<std::size_t>(i)] + t * radius_[static_cast<std::size_t>((i + 1) % kBins)];
  }

  /// Radial distance from `q` to the pattern, negative inside it.
  double signed_error(const Vec2& q) const {
    const Vec2 d = q - target_;
    return d.norm() - radius_at(std::atan2(d.x(), d.y()));
  }

  double error(const Vec2& q) const { return std::abs(signed_error(q)); }

 private:
  static int bin(double bearing) { return static_cast<int>(wrap_two_pi(bearing) / kTwoPi * kBins) % kBins; }

  Vec2 target_ = Vec2::Zero();
  std::vector<double> radius_;
};

struct PlanningWeights {
  double obstacle = 2.0;  // per unit of log-excess, roughly m of cost per m of intrusion
  double neighbor = 1.0;
  double inside = 4.0;    // cost per m of pattern error on the target side
};

/// Field the planner minimises while a target is tracked: radial distance to
/// the pattern, plus a crowding cost max(0, ln(u / sqrt(theta))) for the
/// obstacle and neighbour fields u. The crowding cost vanishes exactly where
/// the fused sigmoid switches off (the reach) and grows about linearly
/// inside it, so the sum is lowest on the contour away from other bodies.
/// Neighbour crowding is read where the point's bearing meets the contour,
/// so neighbours spread agents along the ring instead of off it.
/// Error on the target side of the contour is weighted up: with equal
/// weights the summed rays of an agent inside the ring favour chords and it
/// never gets out.
class PlanningField {
 public:
  PlanningField(const GrnFrame& f, const GrnParams& p, const PlanningWeights& w)
      : frame_(&f), weights_(w), centre_(f.t.geom.center()), threshold_(std::sqrt(p.theta)) {
    if (f.pattern) profile_ = RadialProfile(*f.pattern);
    has_obstacles_ = f.o.max_value() > threshold_;
    has_neighbors_ = f.n.max_value() > threshold_;
  }

  double pattern_error(const Vec2& q) const { return profile_ ? profile_->error(centre_ + q) : 0.0; }

  /// Pattern error plus crowding, in metres without the inside weight.
  double distance(const Vec2& q) const { return pattern_error(q) + crowding(q); }

  double crowding(const Vec2& q) const {
    double c = 0.0;
    if (has_obstacles_) c += weights_.obstacle * excess(frame_->o, q);
    if (has_neighbors_) c += weights_.neighbor * excess(frame_->n, profile_ ? on_pattern(q) : q);
    return c;
  }

  /// Point of the pattern on the bearing of `q` about the target.
  Vec2 on_pattern(const Vec2& q) const {
    const Vec2 d = centre_ + q - profile_->target();
    const double b = std::atan2(d.x(), d.y());
    return profile_->target() + profile_->radius_at(b) * Vec2{std::sin(b), std::cos(b)} - centre_;
  }

  double operator()(const Vec2& q) const {
    if (!profile_) return crowding(q);
    const double e = profile_->signed_error(centre_ + q);
    return (e < 0.0 ? -weights_.inside * e : e) + crowding(q);
  }

 private:
  double excess(const FieldGrid& u, const Vec2& q) const {
    const Vec2 p = centre_ + q;
    if (!u.geom.contains(p)) return 0.0;
    const double v = concentration_at(u, p);
    return v > threshold_ ? std::log(v / threshold_) : 0.0;
  }

  const GrnFrame* frame_;
  PlanningWeights weights_;
  Vec2 centre_;
  double threshold_;
  std::optional<RadialProfile> profile_;
  bool has_obstacles_ = false;
  bool has_neighbors_ = false;
};

/// Distance the agent could still gain within sampling reach, less the
/// on-pattern deadband. Drives the dynamic step.
inline double step_proxy(const PlanningField& field, const SamplingScheme& scheme, double deadband) {
  double best = field.distance(Vec2::Zero());
  const double here = best;
  for (int d = 0; d < scheme.n_directions; ++d)
    for (double r : scheme.radii) best = std::min(best, field.distance(ray_point(scheme.angle(d), r)));
  return std::max(0.0, here - best - deadband);
}

// ---------------------------------------------------------------------------
// Command

struct MotionParams {
  double max_speed = 5.0;        // m/s
  double dt = 0.05;              // s
  double k_scale = 1.0;
  double step_ref = 2.0;         // distance proxy at which the full step is used, m
  double step_deadband = 0.15;   // pattern error treated as on-pattern, m
  double altitude_deadband = 0.1;  // m

  double s_max() const { return max_speed * dt; }
};

struct MotionCommand {
  double theta_dir = 0.0;  // from local +Y toward +X
  double step = 0.0;       // s, m
  double k_scale = 1.0;
  double delta_h = 0.0;    // m
  Vec3 velocity = Vec3::Zero();  // local frame, m/s
};

/// Dynamic step s = s_max * min(1, proxy / step_ref).
inline double dynamic_step(double proxy, const MotionParams& mp) {
  return mp.s_max() * std::clamp(proxy / mp.step_ref, 0.0, 1.0);
}

inline double apply_deadband(double x, double band) { return std::abs(x) <= band ? 0.0 : x; }

/// v = [k s sin(theta), k s cos(theta), k dh] / dt, clamped to max speed.
inline MotionCommand make_command(double theta_dir, double step, double delta_h, const MotionParams& mp) {
  MotionCommand c;
  c.theta_dir = theta_dir;
  c.step = step;
  c.k_scale = mp.k_scale;
  c.delta_h = delta_h;
  const Vec3 raw{mp.k_scale * step * std::sin(theta_dir), mp.k_scale * step * std::cos(theta_dir),
                 mp.k_scale * delta_h};
  c.velocity = clamp_norm(raw / mp.dt, mp.max_speed);
  return c;
}

}  // namespace vgswarm
