#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include "vgswarm/camera.hpp"
#include "vgswarm/estimation.hpp"
#include "vgswarm/grn.hpp"
#include "vgswarm/rng.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <optional>
#include <string>
#include <vector>

namespace vgswarm::testing {

/// Assembles (I - lap) u = gamma with mirrored ghost nodes and solves it
/// directly.
inline Eigen::VectorXd dense_oracle(const FieldGrid& gamma) {
  const auto& g = gamma.geom;
  const int n = static_cast<int>(g.size());
  const double inv_h2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int row = static_cast<int>(g.index(i, j));
      trips.emplace_back(row, row, 1.0 + 4.0 * inv_h2);
      const int nb[4][2] = {{i > 0 ? i - 1 : 1, j},
                            {i < g.nx - 1 ? i + 1 : g.nx - 2, j},
                            {i, j > 0 ? j - 1 : 1},
                            {i, j < g.ny - 1 ? j + 1 : g.ny - 2}};
      for (const auto& q : nb) trips.emplace_back(row, static_cast<int>(g.index(q[0], q[1])), -inv_h2);
    }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  Eigen::VectorXd b(n);
  for (int k = 0; k < n; ++k) b[k] = gamma.values[static_cast<std::size_t>(k)];
  return lu.solve(b);
}

/// Mean relative position error at range d over `observations` frames:
/// sense, fit, decompose, smooth.
inline double pipeline_error(double d, std::uint64_t seed, int observations) {
  const CameraRig rig;
  NoiseModel noise;
  noise.sigma_px = 2.0;
  noise.p_miss = 0.0;
  Rng cal_rng(seed);
  const Calibration cal = fit_calibration(calibration_maneuver(rig, noise, BodyKind::Target, 0.35, cal_rng));
  Rng rng(seed + 1);
  Body target;
  target.id = 1;
  target.kind = BodyKind::Target;
  const Pose3 obs{Vec3(0, 0, 2), 0.0};
  const double bearing = 0.3;
  target.pose.position = {d * std::sin(bearing), d * std::cos(bearing), 2.0};
  DepthFilter f;
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < observations; ++k) {
    const auto det = project(rig, 0, obs, target, noise, rng);
    if (!det || det->truncated) continue;
    const double dist = cal.distance(BodyKind::Target, det->area());
    f.r = range_proportional_r(dist);
    f = kalman_update(f, dist, 0.05);
    const RelPosition p = decompose(*det, f.state, rig);
    sum += (p.position - world_to_local(obs, target.pose.position)).norm() / d;
    ++n;
  }
  return sum / n;
}

struct FieldCase {
  GrnInputs inputs;
  Vec2 target = Vec2::Zero();
};

/// Target within 4 m of the agent, up to 6 obstacles and 5 neighbours
/// scattered within 9 m of it.
inline FieldCase random_case(Rng& rng) {
  FieldCase c;
  c.target = {rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
  c.inputs.targets.push_back(c.target);
  const int n_obs = static_cast<int>(rng.uniform() * 7.0);
  const int n_nb = static_cast<int>(rng.uniform() * 6.0);
  auto around = [&] {
    const double r = rng.uniform(1.0, 9.0), a = rng.uniform(0.0, kTwoPi);
    return Vec2(c.target + r * Vec2(std::cos(a), std::sin(a)));
  };
  for (int k = 0; k < n_obs; ++k) c.inputs.obstacles.push_back(around());
  for (int k = 0; k < n_nb; ++k) c.inputs.neighbors.push_back(around());
  return c;
}

struct FusedFields {
  FieldGrid t, o, n, m;
};

inline FusedFields fused_fields(const GrnInputs& in, const GrnParams& p) {
  const Amplitudes amp = resolve_amplitudes(p);
  SolverOptions opt;
  opt.tol = p.solver_tol;
  FusedFields f;
  const GridGeometry g = p.geometry();
  f.t = solve_source_field(in.targets, g, amp.target, opt);
  f.o = solve_source_field(in.obstacles, g, amp.obstacle, opt);
  f.n = solve_source_field(in.neighbors, g, amp.neighbor, opt);
  f.m = fuse(f.t, f.o, f.n, p);
  return f;
}

/// Description of the first violated pattern condition, or empty.
inline std::optional<std::string> pattern_violation(const EntrapPattern& pat, const GrnParams& p) {
  if (pat.contour.size() < 3) return "contour too short";
  if (!is_simple(pat.contour)) return "contour self-intersects";
  const double dmin = distance_to_loop(pat.contour, pat.target);
  if (dmin < p.safe_distance) return "contour " + std::to_string(dmin) + " m from target";
  for (double q : quadrant_fractions(pat.contour, pat.target))
    if (q < p.quadrant_min || q > p.quadrant_max) return "quadrant share " + std::to_string(q);
  if (!point_in_polygon(pat.contour, pat.target)) return "target not enclosed";
  return std::nullopt;
}

}  // namespace vgswarm::testing
