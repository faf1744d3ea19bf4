#pragma once

// Scalar fields on a square node grid and the steady-state solver for the
// screened Poisson source equation
//
//   0 = lap(u) + gamma - u
//
// with Kronecker sources, a 5-point Laplacian and zero-flux (mirror)
// boundaries. Iteration is red-black SOR; because the colouring is
// preserved by every dihedral symmetry of an odd-sized grid, symmetric
// inputs give bitwise symmetric outputs.

#include "vgswarm/common.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vgswarm {

struct GridGeometry {
  Vec2 origin = Vec2::Zero();  // position of node (0, 0), m
  double h = 0.25;             // node spacing, m
  int nx = 121;
  int ny = 121;

  /// Square grid of n x n nodes centred on the local origin.
  static GridGeometry egocentric(double h = 0.25, int n = 121) {
    GridGeometry g;
    g.h = h;
    g.nx = g.ny = n;
    const double half = 0.5 * (n - 1) * h;
    g.origin = {-half, -half};
    return g;
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  Vec2 node(int i, int j) const { return origin + Vec2{i * h, j * h}; }
  Vec2 center() const { return origin + Vec2{0.5 * (nx - 1) * h, 0.5 * (ny - 1) * h}; }
  double width() const { return (nx - 1) * h; }
  double height() const { return (ny - 1) * h; }

  bool contains(const Vec2& p) const {
    const double fx = (p.x() - origin.x()) / h;
    const double fy = (p.y() - origin.y()) / h;
    return fx >= 0.0 && fy >= 0.0 && fx <= nx - 1 && fy <= ny - 1;
  }

  std::pair<int, int> nearest_node(const Vec2& p) const {
    const int i = static_cast<int>(std::lround((p.x() - origin.x()) / h));
    const int j = static_cast<int>(std::lround((p.y() - origin.y()) / h));
    return {std::clamp(i, 0, nx - 1), std::clamp(j, 0, ny - 1)};
  }

  friend bool operator==(const GridGeometry& a, const GridGeometry& b) {
    return a.origin == b.origin && a.h == b.h && a.nx == b.nx && a.ny == b.ny;
  }

  void validate() const {
    if (!(h > 0.0)) throw std::invalid_argument("GridGeometry: h must be positive");
    if (nx < 3 || ny < 3) throw std::invalid_argument("GridGeometry: need at least 3x3 nodes");
  }
};

struct FieldGrid {
  GridGeometry geom;
  std::vector<double> values;

  FieldGrid() = default;
  explicit FieldGrid(const GridGeometry& g, double fill = 0.0) : geom(g), values(g.size(), fill) {}

  double& at(int i, int j) { return values[geom.index(i, j)]; }
  double at(int i, int j) const { return values[geom.index(i, j)]; }

  double max_value() const { return *std::max_element(values.begin(), values.end()); }
  double min_value() const { return *std::min_element(values.begin(), values.end()); }
};

/// Bilinear interpolation; throws std::out_of_range outside the grid.
inline double concentration_at(const FieldGrid& f, const Vec2& p) {
  const auto& g = f.geom;
  const double fx = (p.x() - g.origin.x()) / g.h;
  const double fy = (p.y() - g.origin.y()) / g.h;
  if (!(fx >= 0.0 && fy >= 0.0 && fx <= g.nx - 1 && fy <= g.ny - 1))
    throw std::out_of_range("concentration_at: point outside grid");
  const int i = std::min(static_cast<int>(fx), g.nx - 2);
  const int j = std::min(static_cast<int>(fy), g.ny - 2);
  const double tx = fx - i;
  const double ty = fy - j;
  const double v00 = f.at(i, j), v10 = f.at(i + 1, j);
  const double v01 = f.at(i, j + 1), v11 = f.at(i + 1, j + 1);
  return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

/// Forcing for point sources of the given amplitude. A source between nodes
/// is shared bilinearly among the surrounding nodes, so a source on a node
/// is a Kronecker delta there. Out-of-grid sources are clamped onto the
/// border.
inline FieldGrid source_term(const std::vector<Vec2>& sources, const GridGeometry& g, double amplitude) {
  FieldGrid gamma(g);
  for (const auto& s : sources) {
    const double fx = std::clamp((s.x() - g.origin.x()) / g.h, 0.0, g.nx - 1.0);
    const double fy = std::clamp((s.y() - g.origin.y()) / g.h, 0.0, g.ny - 1.0);
    const int i = std::min(static_cast<int>(fx), g.nx - 2);
    const int j = std::min(static_cast<int>(fy), g.ny - 2);
    const double tx = fx - i, ty = fy - j;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const int di[4] = {0, 1, 0, 1}, dj[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k)
      if (w[k] != 0.0) gamma.at(i + di[k], j + dj[k]) += amplitude * w[k];
  }
  return gamma;
}

namespace detail {

// Sum of the four neighbours with mirrored ghosts at the border. The
// grouping (left + right) + (down + up) keeps the result invariant under
// reflections and transposition.
inline double neighbour_sum(const FieldGrid& u, int i, int j) {
  const int nx = u.geom.nx, ny = u.geom.ny;
  const double l = u.at(i > 0 ? i - 1 : 1, j);
  const double r = u.at(i < nx - 1 ? i + 1 : nx - 2, j);
  const double d = u.at(i, j > 0 ? j - 1 : 1);
  const double t = u.at(i, j < ny - 1 ? j + 1 : ny - 2);
  return (l + r) + (d + t);
}

}  // namespace detail

/// Largest |lap(u) + gamma - u| over the grid.
inline double residual_norm(const FieldGrid& u, const FieldGrid& gamma) {
  const double inv_h2 = 1.0 / (u.geom.h * u.geom.h);
  double worst = 0.0;
  for (int j = 0; j < u.geom.ny; ++j)
    for (int i = 0; i < u.geom.nx; ++i) {
      const double lap = (detail::neighbour_sum(u, i, j) - 4.0 * u.at(i, j)) * inv_h2;
      worst = std::max(worst, std::abs(lap + gamma.at(i, j) - u.at(i, j)));
    }
  return worst;
}

/// Over-relaxation factor for the screened operator: 2 / (1 + sqrt(1 - rho^2))
/// with the Jacobi spectral bound rho = 4 / (4 + h^2).
inline double sor_omega(double h) {
  const double rho = 4.0 / (4.0 + h * h);
  return 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
}

/// One red-black SOR sweep in place; returns the largest update.
inline double sor_sweep(FieldGrid& u, const FieldGrid& gamma, double omega) {
  const double h2 = u.geom.h * u.geom.h;
  const double denom = 4.0 + h2;
  double worst = 0.0;
  for (int colour = 0; colour < 2; ++colour) {
    for (int j = 0; j < u.geom.ny; ++j) {
      for (int i = (j + colour) % 2; i < u.geom.nx; i += 2) {
        const double gs = (detail::neighbour_sum(u, i, j) + h2 * gamma.at(i, j)) / denom;
        double& v = u.at(i, j);
        const double next = v + omega * (gs - v);
        worst = std::max(worst, std::abs(next - v));
        v = next;
      }
    }
  }
  return worst;
}

/// Iterates SOR until the largest per-node update drops below `tol`.
/// Returns the number of sweeps; throws SolverError after `max_iters`.
inline int solve_in_place(FieldGrid& u, const FieldGrid& gamma, double tol, int max_iters,
                          double omega = 0.0) {
  if (!(u.geom == gamma.geom)) throw std::invalid_argument("solve_in_place: geometry mismatch");
  if (omega <= 0.0) omega = sor_omega(u.geom.h);
  for (int it = 1; it <= max_iters; ++it) {
    if (sor_sweep(u, gamma, omega) < tol) return it;
  }
  throw SolverError("source field solver did not converge", residual_norm(u, gamma), max_iters);
}

// ---------------------------------------------------------------------------
// Lattice Green's function, used to warm-start solves.

/// Response of the infinite lattice to a unit Kronecker source, tabulated
/// for offsets 0..extent in each axis (symmetric in sign and transposition).
class LatticeGreen {
 public:
  LatticeGreen(double h, int extent) : h_(h), extent_(extent) {
    // A corner source with mirror boundaries is the full-plane point source
    // restricted to one quadrant; the far mirror is 2 * extent away.
    GridGeometry g;
    g.h = h;
    g.nx = g.ny = extent + 1;
    FieldGrid gamma(g);
    gamma.at(0, 0) = 1.0;
    FieldGrid u(g);
    solve_in_place(u, gamma, 1e-16, 100000);
    table_ = std::move(u.values);
  }

  double h() const { return h_; }
  int extent() const { return extent_; }

  double operator()(int di, int dj) const {
    di = std::abs(di);
    dj = std::abs(dj);
    if (di > extent_ || dj > extent_) return 0.0;
    return table_[static_cast<std::size_t>(dj) * (extent_ + 1) + di];
  }

  /// Smallest axial offset beyond which the response stays below `eps`.
  int cutoff(double eps) const {
    for (int i = 0; i <= extent_; ++i)
      if ((*this)(i, 0) < eps) return i;
    return extent_;
  }

  /// Value at a continuous axial distance r (m), linear in between nodes.
  double axial(double r) const {
    const double f = r / h_;
    const int i = static_cast<int>(f);
    if (i >= extent_) return 0.0;
    const double t = f - i;
    return (1.0 - t) * (*this)(i, 0) + t * (*this)(i + 1, 0);
  }

 private:
  double h_;
  int extent_;
  std::vector<double> table_;
};

/// Shared table for spacing h covering offsets across an n-node grid twice.
inline std::shared_ptr<const LatticeGreen> lattice_green(double h, int n) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const LatticeGreen>> cache;
  const int extent = 2 * n;
  std::lock_guard lock(mutex);
  auto& slot = cache[{h, extent}];
  if (!slot) slot = std::make_shared<const LatticeGreen>(h, extent);
  return slot;
}

/// Method-of-images superposition of lattice Green's functions: the
/// mirror-boundary solution up to contributions below `floor` per source.
inline FieldGrid image_superposition(const FieldGrid& gamma, double floor = 1e-10) {
  const auto& g = gamma.geom;
  const auto green = lattice_green(g.h, std::max(g.nx, g.ny));
  FieldGrid u(g);

  auto images = [](int s, int n, int ext) {
    std::set<int> out;
    const int period = 2 * (n - 1);
    for (int k = -2; k <= 2; ++k) {
      for (int c : {s + k * period, -s + k * period}) {
        const int gap = c < 0 ? -c : (c > n - 1 ? c - (n - 1) : 0);
        if (gap <= ext) out.insert(c);
      }
    }
    return out;
  };

  for (int sj = 0; sj < g.ny; ++sj) {
    for (int si = 0; si < g.nx; ++si) {
      const double a = gamma.at(si, sj);
      if (a == 0.0) continue;
      const int ext = green->cutoff(floor / std::abs(a));
      const auto xs = images(si, g.nx, ext);
      const auto ys = images(sj, g.ny, ext);
      for (int cy : ys) {
        const int j0 = std::max(0, cy - ext), j1 = std::min(g.ny - 1, cy + ext);
        for (int cx : xs) {
          const int i0 = std::max(0, cx - ext), i1 = std::min(g.nx - 1, cx + ext);
          for (int j = j0; j <= j1; ++j) {
            double* row = &u.values[g.index(0, j)];
            const int dj = j - cy;
            for (int i = i0; i <= i1; ++i) row[i] += a * (*green)(i - cx, dj);
          }
        }
      }
    }
  }
  return u;
}

enum class WarmStart { Zero, Images };

struct SolverOptions {
  double tol = 1e-6;
  int max_iters = 20000;
  WarmStart warm_start = WarmStart::Images;
  const FieldGrid* initial = nullptr;  // overrides warm_start when set
};

/// Steady state of du/dt = lap(u) + gamma - u for Kronecker sources of the
/// given amplitude.
inline FieldGrid solve_source_field(const std::vector<Vec2>& sources, const GridGeometry& g,
                                    double amplitude, const SolverOptions& opt = {}) {
  g.validate();
  const FieldGrid gamma = source_term(sources, g, amplitude);
  if (sources.empty() || amplitude == 0.0) return FieldGrid(g);
  FieldGrid u(g);
  if (opt.initial != nullptr) {
    if (!(opt.initial->geom == g)) throw std::invalid_argument("solve_source_field: initial geometry mismatch");
    u = *opt.initial;
  } else if (opt.warm_start == WarmStart::Images) {
    u = image_superposition(gamma);
  }
  solve_in_place(u, gamma, opt.tol, opt.max_iters);
  return u;
}

/// Explicit-Euler integration of du/dt = lap(u) + gamma - u, in place.
/// Stable for dt <= h^2 / (4 + h^2).
inline void advance_transient(FieldGrid& u, const FieldGrid& gamma, double dt, int steps) {
  const double h2 = u.geom.h * u.geom.h;
  if (dt > h2 / (4.0 + h2) * (1.0 + 1e-12)) throw std::invalid_argument("advance_transient: dt above stability limit");
  FieldGrid next(u.geom);
  for (int s = 0; s < steps; ++s) {
    for (int j = 0; j < u.geom.ny; ++j)
      for (int i = 0; i < u.geom.nx; ++i) {
        const double lap = (detail::neighbour_sum(u, i, j) - 4.0 * u.at(i, j)) / h2;
        next.at(i, j) = u.at(i, j) + dt * (lap + gamma.at(i, j) - u.at(i, j));
      }
    std::swap(u.values, next.values);
  }
}

}  // namespace vgswarm
