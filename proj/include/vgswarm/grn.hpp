#pragma once

// Upper layer of the regulatory network: per-kind source fields, sigmoid
// fusion into the morphogen M, and the entrapping pattern (an iso-contour of
// M around the target).

#include "vgswarm/contour.hpp"
#include "vgswarm/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <tuple>
#include <vector>

namespace vgswarm {

struct GrnParams {
  double theta = 0.5;
  double k_sig = 20.0;
  // Source amplitudes per kind. Non-positive values are derived: the target
  // amplitude so the obstacle-free pattern has `pattern_radius`, the others
  // so that sig(O^2) (resp. sig(N^2)) crosses one half at `*_reach`.
  double source_amplitude = 0.0;
  double obstacle_amplitude = 0.0;
  double neighbor_amplitude = 0.0;
  double pattern_radius = 4.0;
  double obstacle_reach = 1.2;
  double neighbor_reach = 5.0;
  double safe_distance = 2.0;
  double solver_tol = 1e-6;
  int max_iters = 20000;
  double level_step = 0.05;
  double quadrant_min = 0.15;
  double quadrant_max = 0.35;
  int contour_points = 360;
  double h = 0.25;
  int grid_nodes = 121;

  GridGeometry geometry() const { return GridGeometry::egocentric(h, grid_nodes); }

  void validate() const {
    if (!(k_sig > 0.0)) throw std::invalid_argument("GrnParams: k_sig must be positive");
    if (!(safe_distance > 0.0)) throw std::invalid_argument("GrnParams: safe_distance must be positive");
    if (!(level_step > 0.0)) throw std::invalid_argument("GrnParams: level_step must be positive");
    if (!(pattern_radius > safe_distance)) throw std::invalid_argument("GrnParams: pattern_radius must exceed safe_distance");
    if (!(obstacle_reach > 0.0) || !(neighbor_reach > 0.0)) throw std::invalid_argument("GrnParams: reaches must be positive");
    if (!(quadrant_min < 0.25 && quadrant_max > 0.25)) throw std::invalid_argument("GrnParams: quadrant band must contain 0.25");
    if (contour_points < 8) throw std::invalid_argument("GrnParams: contour_points must be at least 8");
    geometry().validate();
  }
};

inline double sigmoid(double x, double theta, double k) { return 1.0 / (1.0 + std::exp(-k * (x - theta))); }

/// M = sig(1 - T^2) + sig(O^2) + sig(N^2), cell by cell.
inline FieldGrid fuse(const FieldGrid& t, const FieldGrid& o, const FieldGrid& n, const GrnParams& p) {
  if (!(t.geom == o.geom) || !(t.geom == n.geom)) throw std::invalid_argument("fuse: geometry mismatch");
  FieldGrid m(t.geom);
  for (std::size_t c = 0; c < m.values.size(); ++c) {
    const double tv = t.values[c], ov = o.values[c], nv = n.values[c];
    m.values[c] = sigmoid(1.0 - tv * tv, p.theta, p.k_sig) + sigmoid(ov * ov, p.theta, p.k_sig) +
                  sigmoid(nv * nv, p.theta, p.k_sig);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Entrapping pattern

struct EntrapPattern {
  std::vector<Vec2> contour;  // closed, counter-clockwise, first point not repeated
  double level = 0.0;         // C_P
  Vec2 target = Vec2::Zero();
  bool fallback = false;

  double mean_radius() const {
    if (contour.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : contour) s += (p - target).norm();
    return s / static_cast<double>(contour.size());
  }
  double min_radius() const { return distance_to_loop(contour, target); }
  Vec2 centroid() const {
    Vec2 c = Vec2::Zero();
    for (const auto& p : contour) c += p;
    return contour.empty() ? c : Vec2(c / static_cast<double>(contour.size()));
  }
};

/// Why a candidate contour was rejected; `Ok` when it satisfies both
/// pattern conditions.
enum class PatternCheck { Ok, NotSimple, TooClose, Unbalanced };

inline PatternCheck check_pattern(const std::vector<Vec2>& contour, const Vec2& target, const GrnParams& p) {
  if (!is_simple(contour)) return PatternCheck::NotSimple;
  if (distance_to_loop(contour, target) < p.safe_distance) return PatternCheck::TooClose;
  for (double q : quadrant_fractions(contour, target))
    if (q < p.quadrant_min || q > p.quadrant_max) return PatternCheck::Unbalanced;
  return PatternCheck::Ok;
}

namespace detail {

// Sub-level component of `level` containing node (si, sj), 4-connected.
// Returns false when it reaches the grid border.
inline bool enclosed_component(const FieldGrid& m, int si, int sj, double level, CellWindow& box) {
  const auto& g = m.geom;
  std::vector<char> seen(g.size(), 0);
  std::vector<std::pair<int, int>> stack{{si, sj}};
  seen[g.index(si, sj)] = 1;
  box = {si, sj, si, sj};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1) return false;
    box.i0 = std::min(box.i0, i);
    box.j0 = std::min(box.j0, j);
    box.i1 = std::max(box.i1, i);
    box.j1 = std::max(box.j1, j);
    const int ni[4] = {i - 1, i + 1, i, i};
    const int nj[4] = {j, j, j - 1, j + 1};
    for (int k = 0; k < 4; ++k) {
      const std::size_t c = g.index(ni[k], nj[k]);
      if (!seen[c] && m.values[c] < level) {
        seen[c] = 1;
        stack.emplace_back(ni[k], nj[k]);
      }
    }
  }
  return true;
}

// Smallest closed iso-loop at `level` that encloses `target`, if any.
inline std::optional<std::vector<Vec2>> enclosing_loop(const FieldGrid& m, const Vec2& target, double level) {
  const auto& g = m.geom;
  const auto [si, sj] = g.nearest_node(target);
  if (!(m.at(si, sj) < level)) return std::nullopt;
  CellWindow box;
  if (!enclosed_component(m, si, sj, level, box)) return std::nullopt;
  box = {box.i0 - 1, box.j0 - 1, box.i1, box.j1};
  std::optional<std::vector<Vec2>> best;
  double best_area = std::numeric_limits<double>::infinity();
  for (auto& pl : iso_contours(m, level, box)) {
    if (!pl.closed || pl.points.size() < 3) continue;
    if (!point_in_polygon(pl.points, target)) continue;
    const double a = std::abs(signed_area(pl.points));
    if (a < best_area) {
      best_area = a;
      best = std::move(pl.points);
    }
  }
  return best;
}

}  // namespace detail

/// Lowest-level iso-contour of `m` around `target` that is simple, keeps
/// `safe_distance` from the target and is quadrant-balanced. Levels are
/// scanned upward in `level_step` increments from the largest value of `m`
/// on the safe circle (exclusive: that level's contour touches the circle).
/// Throws PatternUnavailable when no level qualifies.
inline EntrapPattern extract_pattern(const FieldGrid& m, const Vec2& target, const GrnParams& p) {
  const auto& g = m.geom;
  if (!g.contains(target)) throw std::invalid_argument("extract_pattern: target outside grid");
  const double margin = std::min({target.x() - g.origin.x(), target.y() - g.origin.y(),
                                  g.origin.x() + g.width() - target.x(), g.origin.y() + g.height() - target.y()});
  if (margin <= p.safe_distance) throw PatternUnavailable("extract_pattern: target too close to the grid edge");

  double c0 = -std::numeric_limits<double>::infinity();
  constexpr int kRing = 360;
  for (int k = 0; k < kRing; ++k) {
    const double a = kTwoPi * k / kRing;
    c0 = std::max(c0, concentration_at(m, target + p.safe_distance * Vec2{std::cos(a), std::sin(a)}));
  }
  const double top = m.max_value();
  for (int step = 1;; ++step) {
    const double level = c0 + step * p.level_step;
    if (level >= top) break;
    auto loop = detail::enclosing_loop(m, target, level);
    if (!loop) continue;
    auto contour = resample_closed(*loop, p.contour_points);
    if (signed_area(contour) < 0.0) std::reverse(contour.begin(), contour.end());
    if (check_pattern(contour, target, p) != PatternCheck::Ok) continue;
    return {std::move(contour), level, target, false};
  }
  throw PatternUnavailable("extract_pattern: no contour satisfies the pattern conditions");
}

/// Safe-distance circle used when no contour qualifies. Its level is the
/// mean of `m` along the circle (or 0 when it leaves the grid).
inline EntrapPattern fallback_pattern(const FieldGrid& m, const Vec2& target, const GrnParams& p) {
  EntrapPattern out;
  out.target = target;
  out.fallback = true;
  out.contour.reserve(static_cast<std::size_t>(p.contour_points));
  double sum = 0.0;
  bool inside = true;
  for (int k = 0; k < p.contour_points; ++k) {
    const double a = kTwoPi * k / p.contour_points;
    const Vec2 q = target + p.safe_distance * Vec2{std::cos(a), std::sin(a)};
    out.contour.push_back(q);
    if (inside && m.geom.contains(q)) sum += concentration_at(m, q);
    else inside = false;
  }
  out.level = inside ? sum / p.contour_points : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Amplitudes

struct Amplitudes {
  double target = 0.0;
  double obstacle = 0.0;
  double neighbor = 0.0;
};

namespace detail {

inline double reach_amplitude(const GrnParams& p, double reach) {
  const auto green = lattice_green(p.h, p.grid_nodes);
  return std::sqrt(p.theta) / green->axial(reach);
}

inline double free_pattern_radius(const GrnParams& p, double amplitude) {
  const GridGeometry g = p.geometry();
  const Vec2 c = g.center();
  SolverOptions opt;
  opt.tol = p.solver_tol;
  opt.max_iters = p.max_iters;
  const FieldGrid t = solve_source_field({c}, g, amplitude, opt);
  const FieldGrid zero(g);
  try {
    return extract_pattern(fuse(t, zero, zero, p), c, p).mean_radius();
  } catch (const PatternUnavailable&) {
    return 0.0;
  }
}

}  // namespace detail

/// Resolves derived amplitudes. The target amplitude is found by bisection
/// on the radius of the extracted obstacle-free pattern; results are cached.
inline Amplitudes resolve_amplitudes(const GrnParams& p) {
  using Key = std::tuple<double, double, double, double, double, double, double, double, int, double, int>;
  static std::mutex mutex;
  static std::map<Key, double> target_cache;

  Amplitudes a;
  a.obstacle = p.obstacle_amplitude > 0.0 ? p.obstacle_amplitude : detail::reach_amplitude(p, p.obstacle_reach);
  a.neighbor = p.neighbor_amplitude > 0.0 ? p.neighbor_amplitude : detail::reach_amplitude(p, p.neighbor_reach);
  if (p.source_amplitude > 0.0) {
    a.target = p.source_amplitude;
    return a;
  }
  const Key key{p.theta, p.k_sig, p.pattern_radius, p.safe_distance, p.solver_tol, p.level_step,
                p.quadrant_min, p.quadrant_max, p.contour_points, p.h, p.grid_nodes};
  std::lock_guard lock(mutex);
  if (auto it = target_cache.find(key); it != target_cache.end()) {
    a.target = it->second;
    return a;
  }
  // Closed-form start: T at the pattern radius equal to the value whose
  // sigmoid sits one level step above zero.
  const double l = p.level_step;
  const double t_needed = std::sqrt(std::max(1e-6, 1.0 - p.theta + std::log(1.0 / l - 1.0) / p.k_sig));
  const double guess = t_needed / lattice_green(p.h, p.grid_nodes)->axial(p.pattern_radius);
  double lo = 0.5 * guess, hi = 2.0 * guess;
  while (detail::free_pattern_radius(p, lo) > p.pattern_radius) lo *= 0.5;
  while (detail::free_pattern_radius(p, hi) < p.pattern_radius) hi *= 2.0;
  for (int it = 0; it < 40 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (detail::free_pattern_radius(p, mid) < p.pattern_radius ? lo : hi) = mid;
  }
  a.target = 0.5 * (lo + hi);
  target_cache[key] = a.target;
  return a;
}

// ---------------------------------------------------------------------------
// One agent's evaluation

/// Inputs are planar positions in the agent's local frame.
struct GrnInputs {
  std::vector<Vec2> targets;
  std::vector<Vec2> obstacles;
  std::vector<Vec2> neighbors;
};

struct GrnFrame {
  FieldGrid t, o, n;
  FieldGrid pattern_field;  // fuse(T, O, 0): the field the pattern is cut from
  std::optional<EntrapPattern> pattern;
  double c_c = 0.0;  // pattern field at the agent (grid centre)
  double c_p = 0.0;

  FieldGrid m(const GrnParams& p) const { return fuse(t, o, n, p); }
};

/// Solves the three source fields on the egocentric grid and extracts the
/// pattern around the nearest target. Neighbour repulsion stays out of the
/// pattern field so the ring is shared by all captors; it enters motion
/// planning instead.
inline GrnFrame evaluate_grn(const GrnInputs& in, const GrnParams& p) {
  const GridGeometry g = p.geometry();
  const Amplitudes amp = resolve_amplitudes(p);
  SolverOptions opt;
  opt.tol = p.solver_tol;
  opt.max_iters = p.max_iters;
  GrnFrame f;
  f.t = solve_source_field(in.targets, g, amp.target, opt);
  f.o = solve_source_field(in.obstacles, g, amp.obstacle, opt);
  f.n = solve_source_field(in.neighbors, g, amp.neighbor, opt);

  f.pattern_field = FieldGrid(g);
  const double free_o = sigmoid(0.0, p.theta, p.k_sig);
  const bool no_obstacles = in.obstacles.empty();
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double tv = f.t.values[c];
    const double ov = f.o.values[c];
    f.pattern_field.values[c] = sigmoid(1.0 - tv * tv, p.theta, p.k_sig) +
                                (no_obstacles ? free_o : sigmoid(ov * ov, p.theta, p.k_sig));
  }
  f.c_c = concentration_at(f.pattern_field, g.center());
  if (in.targets.empty()) return f;

  const Vec2 centre = g.center();
  const Vec2* nearest = &in.targets.front();
  for (const auto& t : in.targets)
    if ((t - centre).norm() < (*nearest - centre).norm()) nearest = &t;
  Vec2 target = *nearest;
  if (!g.contains(target)) target = g.node(g.nearest_node(target).first, g.nearest_node(target).second);
  try {
    f.pattern = extract_pattern(f.pattern_field, target, p);
  } catch (const PatternUnavailable&) {
    f.pattern = fallback_pattern(f.pattern_field, target, p);
  }
  f.c_p = f.pattern->level;
  return f;
}

/// Debug dump: one row per node.
inline void write_field_csv(std::ostream& os, const GrnFrame& f, const GrnParams& p) {
  const FieldGrid m = f.m(p);
  os << "row,col,T,O,N,M\n" << std::setprecision(10);
  const auto& g = f.t.geom;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      os << j << ',' << i << ',' << f.t.at(i, j) << ',' << f.o.at(i, j) << ',' << f.n.at(i, j) << ','
         << m.at(i, j) << '\n';
}

}  // namespace vgswarm
