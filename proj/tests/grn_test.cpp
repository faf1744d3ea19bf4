#include "vgswarm/grn.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace vgswarm;
using vgswarm::testing::fused_fields;
using vgswarm::testing::pattern_violation;
using vgswarm::testing::random_case;

namespace {

const GrnParams& params() {
  static const GrnParams p;
  return p;
}

// Radius along +x where the field first rises through `level`.
double crossing_radius(const FieldGrid& m, const Vec2& c, double level) {
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (concentration_at(m, c + Vec2(mid, 0.0)) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Sigmoid, Values) {
  EXPECT_DOUBLE_EQ(sigmoid(0.5, 0.5, 20.0), 0.5);
  EXPECT_NEAR(sigmoid(1.0, 0.5, 20.0), 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
}

TEST(Fuse, ZeroInputs) {
  const GrnParams& p = params();
  const FieldGrid z(GridGeometry::egocentric(0.25, 11));
  const FieldGrid m = fuse(z, z, z, p);
  const double expected = sigmoid(1.0, p.theta, p.k_sig) + 2.0 * sigmoid(0.0, p.theta, p.k_sig);
  for (double v : m.values) EXPECT_DOUBLE_EQ(v, expected);
}

TEST(Fuse, TargetLowersObstacleRaises) {
  const GrnParams& p = params();
  GrnInputs in;
  in.targets = {{-3.0, 0.0}};
  in.obstacles = {{4.0, 0.0}};
  const auto f = fused_fields(in, p);
  const double ambient = concentration_at(f.m, {0.5, 6.0});
  EXPECT_LT(concentration_at(f.m, {-3.0, 0.0}), ambient);
  EXPECT_GT(concentration_at(f.m, {4.0, 0.0}), ambient);
}

TEST(Fuse, MonotoneInInputs) {
  const GrnParams& p = params();
  const GridGeometry g = GridGeometry::egocentric(0.25, 3);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    FieldGrid t(g, rng.uniform(0, 2)), o(g, rng.uniform(0, 2)), n(g, rng.uniform(0, 2));
    const double base = fuse(t, o, n, p).values[0];
    FieldGrid t2 = t, o2 = o, n2 = n;
    for (auto* f : {&t2, &o2, &n2})
      for (auto& v : f->values) v += 0.1;
    EXPECT_LE(fuse(t2, o, n, p).values[0], base);
    EXPECT_GE(fuse(t, o2, n, p).values[0], base);
    EXPECT_GE(fuse(t, o, n2, p).values[0], base);
  }
}

TEST(Fuse, StrictlyInsideZeroToThree) {
  Rng rng(12);
  for (int k = 0; k < 5; ++k) {
    const auto c = random_case(rng);
    const auto f = fused_fields(c.inputs, params());
    EXPECT_GT(f.m.min_value(), 0.0);
    EXPECT_LT(f.m.max_value(), 3.0);
  }
}

TEST(Amplitudes, FreePatternAtTwiceSafeDistance) {
  const GrnParams& p = params();
  GrnInputs in;
  in.targets = {{0.0, 0.0}};
  const auto f = fused_fields(in, p);
  const EntrapPattern pat = extract_pattern(f.m, {0.0, 0.0}, p);
  EXPECT_NEAR(pat.mean_radius(), 2.0 * p.safe_distance, 0.1);
}

TEST(Amplitudes, ReachSetsHalfSigmoid) {
  const GrnParams& p = params();
  const Amplitudes amp = resolve_amplitudes(p);
  const auto green = lattice_green(p.h, p.grid_nodes);
  EXPECT_NEAR(amp.obstacle * green->axial(p.obstacle_reach), std::sqrt(p.theta), 1e-12);
  EXPECT_NEAR(amp.neighbor * green->axial(p.neighbor_reach), std::sqrt(p.theta), 1e-12);
}

TEST(Pattern, SingleTargetIsCircle) {
  const GrnParams& p = params();
  const Vec2 target{1.0, -0.5};
  GrnInputs in;
  in.targets = {target};
  const auto f = fused_fields(in, p);
  const EntrapPattern pat = extract_pattern(f.m, target, p);
  const double r = crossing_radius(f.m, target, pat.level);
  EXPECT_GE(r, p.safe_distance);
  double worst = 0.0;
  for (const auto& q : pat.contour) worst = std::max(worst, std::abs((q - target).norm() - r));
  EXPECT_LE(worst, 1.5 * p.h);
  // Coverage: every bearing has a contour point within a few degrees.
  std::vector<double> bearings;
  for (const auto& q : pat.contour) bearings.push_back(std::atan2(q.y() - target.y(), q.x() - target.x()));
  std::sort(bearings.begin(), bearings.end());
  double gap = bearings.front() + kTwoPi - bearings.back();
  for (std::size_t k = 1; k < bearings.size(); ++k) gap = std::max(gap, bearings[k] - bearings[k - 1]);
  EXPECT_LT(gap, deg2rad(5.0));
  EXPECT_FALSE(pattern_violation(pat, p));
}

TEST(Pattern, BulgesAwayFromObstacle) {
  const GrnParams& p = params();
  const Vec2 target{0.0, 0.0}, obstacle{4.6, 0.0};
  GrnInputs free_in;
  free_in.targets = {target};
  const EntrapPattern circle = extract_pattern(fused_fields(free_in, p).m, target, p);
  GrnInputs in = free_in;
  in.obstacles = {obstacle};
  const EntrapPattern bent = extract_pattern(fused_fields(in, p).m, target, p);
  double d_circle = 1e9, d_bent = 1e9;
  for (const auto& q : circle.contour) d_circle = std::min(d_circle, (q - obstacle).norm());
  for (const auto& q : bent.contour) d_bent = std::min(d_bent, (q - obstacle).norm());
  EXPECT_GT(d_bent, d_circle);
  EXPECT_FALSE(pattern_violation(bent, p));
}

TEST(Pattern, TargetNearGridEdgeUnavailable) {
  const GrnParams& p = params();
  const GridGeometry g = p.geometry();
  const Vec2 target{g.origin.x() + 1.5, 0.0};
  GrnInputs in;
  in.targets = {target};
  EXPECT_THROW(extract_pattern(fused_fields(in, p).m, target, p), PatternUnavailable);
}

TEST(Pattern, LevelAboveSafeCircle) {
  const GrnParams& p = params();
  GrnInputs in;
  in.targets = {{0.0, 0.0}};
  in.obstacles = {{3.0, 3.0}};
  const auto f = fused_fields(in, p);
  const EntrapPattern pat = extract_pattern(f.m, {0.0, 0.0}, p);
  double c0 = -1e9;
  for (int k = 0; k < 360; ++k) {
    const double a = kTwoPi * k / 360;
    c0 = std::max(c0, concentration_at(f.m, p.safe_distance * Vec2(std::cos(a), std::sin(a))));
  }
  EXPECT_GT(pat.level, c0);
}

TEST(Pattern, RandomConfigurationsSatisfyConditions) {
  // Both the full morphogen and the neighbour-free pattern field either give
  // a valid pattern or report that none exists.
  const GrnParams& p = params();
  Rng rng(2024);
  int full_found = 0, frame_found = 0;
  for (int k = 0; k < 40; ++k) {
    const auto c = random_case(rng);
    const auto f = fused_fields(c.inputs, p);
    try {
      const auto v = pattern_violation(extract_pattern(f.m, c.target, p), p);
      EXPECT_FALSE(v) << "case " << k << ": " << v.value_or("");
      ++full_found;
    } catch (const PatternUnavailable&) {
    }
    const GrnFrame frame = evaluate_grn(c.inputs, p);
    ASSERT_TRUE(frame.pattern);
    if (!frame.pattern->fallback) {
      const auto v = pattern_violation(*frame.pattern, p);
      EXPECT_FALSE(v) << "case " << k << ": " << v.value_or("");
      ++frame_found;
    }
  }
  EXPECT_GE(full_found, 5);
  EXPECT_GE(frame_found, 5);
}

TEST(Pattern, FallbackCircle) {
  const GrnParams& p = params();
  const FieldGrid m(p.geometry(), 1.0);
  const EntrapPattern pat = fallback_pattern(m, {0.0, 0.0}, p);
  EXPECT_TRUE(pat.fallback);
  EXPECT_NEAR(pat.mean_radius(), p.safe_distance, 1e-12);
  EXPECT_NEAR(pat.level, 1.0, 1e-12);
}

TEST(Evaluate, CentreValueAndPatternLevel) {
  const GrnParams& p = params();
  GrnInputs in;
  in.targets = {{0.0, 6.0}};
  const GrnFrame f = evaluate_grn(in, p);
  ASSERT_TRUE(f.pattern);
  EXPECT_FALSE(f.pattern->fallback);
  EXPECT_DOUBLE_EQ(f.c_c, concentration_at(f.pattern_field, Vec2::Zero()));
  EXPECT_DOUBLE_EQ(f.c_p, f.pattern->level);
  // Outside the ring the field reads above the contour level.
  EXPECT_GT(f.c_c, f.c_p);
}

TEST(Evaluate, NoTargetNoPattern) {
  GrnInputs in;
  in.obstacles = {{2.0, 2.0}};
  EXPECT_FALSE(evaluate_grn(in, params()).pattern);
}

TEST(Contour, SquareLoop) {
  FieldGrid f(GridGeometry::egocentric(1.0, 5));
  f.at(2, 2) = 1.0;
  const auto lines = iso_contours(f, 0.5);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_TRUE(lines[0].closed);
  EXPECT_EQ(lines[0].points.size(), 4u);
  EXPECT_NEAR(std::abs(signed_area(lines[0].points)), 0.5, 1e-12);
}

TEST(Contour, SimplicityCheck) {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const std::vector<Vec2> bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  EXPECT_TRUE(is_simple(square));
  EXPECT_FALSE(is_simple(bowtie));
}

TEST(Contour, QuadrantFractions) {
  const std::vector<Vec2> pts{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}, {2, 2}, {3, 3}, {-2, 1}, {1, -5}};
  const auto q = quadrant_fractions(pts, Vec2::Zero());
  EXPECT_DOUBLE_EQ(q[0], 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(q[1], 2.0 / 8.0);
  EXPECT_DOUBLE_EQ(q[2], 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(q[3], 2.0 / 8.0);
}

TEST(Contour, ResampleEvenSpacing) {
  const std::vector<Vec2> square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  const auto pts = resample_closed(square, 16);
  ASSERT_EQ(pts.size(), 16u);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_NEAR((pts[(k + 1) % 16] - pts[k]).norm(), 1.0, 1e-12);
}
