#pragma once

// Iso-contours of node fields by marching squares with linear edge
// interpolation, plus the small polygon toolkit the pattern logic needs.

#include "vgswarm/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace vgswarm {

struct Polyline {
  std::vector<Vec2> points;
  bool closed = false;  // for closed loops the first point is not repeated
};

namespace detail {

// Edge ids: 2 * node_index for the edge to the right of a node, +1 for the
// edge above it.
inline std::int64_t h_edge(const GridGeometry& g, int i, int j) { return 2 * static_cast<std::int64_t>(g.index(i, j)); }
inline std::int64_t v_edge(const GridGeometry& g, int i, int j) { return 2 * static_cast<std::int64_t>(g.index(i, j)) + 1; }

}  // namespace detail

/// Inclusive range of cells (cell (i, j) spans nodes i..i+1, j..j+1).
struct CellWindow {
  int i0 = 0, j0 = 0, i1 = -1, j1 = -1;  // i1 < 0: whole grid
};

/// All iso-lines of `f` at `level` inside `window`. Nodes equal to the level
/// count as above. Saddle cells are resolved with the cell-centre average.
inline std::vector<Polyline> iso_contours(const FieldGrid& f, double level, CellWindow window = {}) {
  const auto& g = f.geom;
  if (window.i1 < 0) window = {0, 0, g.nx - 2, g.ny - 2};
  window.i0 = std::max(window.i0, 0);
  window.j0 = std::max(window.j0, 0);
  window.i1 = std::min(window.i1, g.nx - 2);
  window.j1 = std::min(window.j1, g.ny - 2);
  const std::size_t n_edges = 2 * g.size();
  std::vector<int> point_of_edge(n_edges, -1);
  std::vector<Vec2> pts;
  std::vector<std::array<int, 2>> adj;

  auto crossing = [&](std::int64_t edge, int ia, int ja, int ib, int jb) -> int {
    int& slot = point_of_edge[static_cast<std::size_t>(edge)];
    if (slot >= 0) return slot;
    const double va = f.at(ia, ja), vb = f.at(ib, jb);
    const double t = (level - va) / (vb - va);
    pts.push_back(g.node(ia, ja) + t * (g.node(ib, jb) - g.node(ia, ja)));
    adj.push_back({-1, -1});
    slot = static_cast<int>(pts.size()) - 1;
    return slot;
  };
  auto link = [&](int a, int b) {
    (adj[a][0] < 0 ? adj[a][0] : adj[a][1]) = b;
    (adj[b][0] < 0 ? adj[b][0] : adj[b][1]) = a;
  };

  for (int j = window.j0; j <= window.j1; ++j) {
    for (int i = window.i0; i <= window.i1; ++i) {
      const double v00 = f.at(i, j), v10 = f.at(i + 1, j), v11 = f.at(i + 1, j + 1), v01 = f.at(i, j + 1);
      const int code = (v00 >= level ? 1 : 0) | (v10 >= level ? 2 : 0) | (v11 >= level ? 4 : 0) | (v01 >= level ? 8 : 0);
      if (code == 0 || code == 15) continue;
      // Edge crossings: bottom, right, top, left.
      auto e = [&](int which) {
        switch (which) {
          case 0: return crossing(detail::h_edge(g, i, j), i, j, i + 1, j);
          case 1: return crossing(detail::v_edge(g, i + 1, j), i + 1, j, i + 1, j + 1);
          case 2: return crossing(detail::h_edge(g, i, j + 1), i, j + 1, i + 1, j + 1);
          default: return crossing(detail::v_edge(g, i, j), i, j, i, j + 1);
        }
      };
      const bool centre_above = 0.25 * (v00 + v10 + v11 + v01) >= level;
      switch (code) {
        case 1: case 14: link(e(3), e(0)); break;
        case 2: case 13: link(e(0), e(1)); break;
        case 3: case 12: link(e(3), e(1)); break;
        case 4: case 11: link(e(1), e(2)); break;
        case 6: case 9: link(e(0), e(2)); break;
        case 7: case 8: link(e(3), e(2)); break;
        case 5:  // v00 and v11 above
          if (centre_above) { link(e(3), e(2)); link(e(0), e(1)); }
          else { link(e(3), e(0)); link(e(1), e(2)); }
          break;
        case 10:  // v10 and v01 above
          if (centre_above) { link(e(3), e(0)); link(e(1), e(2)); }
          else { link(e(3), e(2)); link(e(0), e(1)); }
          break;
        default: break;
      }
    }
  }

  std::vector<Polyline> out;
  std::vector<bool> seen(pts.size(), false);
  auto walk = [&](int start, bool closed) {
    Polyline pl;
    pl.closed = closed;
    int prev = -1, cur = start;
    while (cur >= 0 && !seen[cur]) {
      seen[cur] = true;
      pl.points.push_back(pts[cur]);
      const int next = adj[cur][0] != prev ? adj[cur][0] : adj[cur][1];
      prev = cur;
      cur = next;
    }
    out.push_back(std::move(pl));
  };
  // Open chains start at an end point (degree one, on the grid border).
  for (std::size_t p = 0; p < pts.size(); ++p)
    if (!seen[p] && adj[p][1] < 0) walk(static_cast<int>(p), false);
  for (std::size_t p = 0; p < pts.size(); ++p)
    if (!seen[p]) walk(static_cast<int>(p), true);
  return out;
}

/// Signed shoelace area (positive for counter-clockwise loops).
inline double signed_area(const std::vector<Vec2>& loop) {
  double a = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const Vec2& p = loop[k];
    const Vec2& q = loop[(k + 1) % loop.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline bool point_in_polygon(const std::vector<Vec2>& loop, const Vec2& p) {
  bool inside = false;
  for (std::size_t k = 0, m = loop.size() - 1; k < loop.size(); m = k++) {
    const Vec2& a = loop[k];
    const Vec2& b = loop[m];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

inline double perimeter(const std::vector<Vec2>& loop) {
  double len = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) len += (loop[(k + 1) % loop.size()] - loop[k]).norm();
  return len;
}

/// `n` points equally spaced by arc length along a closed loop.
inline std::vector<Vec2> resample_closed(const std::vector<Vec2>& loop, int n) {
  std::vector<Vec2> out;
  if (loop.size() < 2 || n <= 0) return out;
  const double total = perimeter(loop);
  const double step = total / n;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  double seg_start = 0.0;
  double seg_len = (loop[1 % loop.size()] - loop[0]).norm();
  for (int k = 0; k < n; ++k) {
    const double s = k * step;
    while (seg_start + seg_len < s && seg + 1 < loop.size()) {
      seg_start += seg_len;
      ++seg;
      seg_len = (loop[(seg + 1) % loop.size()] - loop[seg]).norm();
    }
    const Vec2& a = loop[seg];
    const Vec2& b = loop[(seg + 1) % loop.size()];
    const double t = seg_len > 0.0 ? std::clamp((s - seg_start) / seg_len, 0.0, 1.0) : 0.0;
    out.push_back(a + t * (b - a));
  }
  return out;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

inline double distance_to_loop(const std::vector<Vec2>& loop, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < loop.size(); ++k)
    best = std::min(best, point_segment_distance(p, loop[k], loop[(k + 1) % loop.size()]));
  return best;
}

namespace detail {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace detail

/// True when no two non-adjacent edges of the closed loop properly cross.
inline bool is_simple(const std::vector<Vec2>& loop) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  for (std::size_t a = 0; a < n; ++a) {
    const Vec2& p1 = loop[a];
    const Vec2& p2 = loop[(a + 1) % n];
    const double minx = std::min(p1.x(), p2.x()), maxx = std::max(p1.x(), p2.x());
    const double miny = std::min(p1.y(), p2.y()), maxy = std::max(p1.y(), p2.y());
    for (std::size_t b = a + 2; b < n; ++b) {
      if (a == 0 && b == n - 1) continue;
      const Vec2& q1 = loop[b];
      const Vec2& q2 = loop[(b + 1) % n];
      if (std::max(q1.x(), q2.x()) < minx || std::min(q1.x(), q2.x()) > maxx ||
          std::max(q1.y(), q2.y()) < miny || std::min(q1.y(), q2.y()) > maxy)
        continue;
      if (detail::segments_cross(p1, p2, q1, q2)) return false;
    }
  }
  return true;
}

/// Fraction of points in each target-centred quadrant (+x+y, -x+y, -x-y, +x-y).
inline std::array<double, 4> quadrant_fractions(const std::vector<Vec2>& pts, const Vec2& centre) {
  std::array<double, 4> c{0, 0, 0, 0};
  for (const auto& p : pts) {
    const double dx = p.x() - centre.x(), dy = p.y() - centre.y();
    const int q = dx >= 0.0 ? (dy >= 0.0 ? 0 : 3) : (dy >= 0.0 ? 1 : 2);
    c[static_cast<std::size_t>(q)] += 1.0;
  }
  if (!pts.empty())
    for (auto& v : c) v /= static_cast<double>(pts.size());
  return c;
}

}  // namespace vgswarm
