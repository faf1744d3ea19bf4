#include "vgswarm/metrics.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace vgswarm;

namespace {

Vec3 polar(double bearing_deg, double r, const Vec3& c = Vec3::Zero()) {
  const double b = deg2rad(bearing_deg);
  return c + Vec3(r * std::sin(b), r * std::cos(b), 0.0);
}

std::vector<CaptorSnapshot> stopped_at(const std::vector<double>& bearings, double r, const Vec3& c = Vec3::Zero()) {
  std::vector<CaptorSnapshot> out;
  for (double b : bearings) out.push_back({polar(b, r, c), 0.0});
  return out;
}

RunSummary run_with(double distance, std::optional<std::int64_t> tick, double speed = 1.0) {
  RunSummary r;
  r.initial_distance = distance;
  r.dt = 0.05;
  r.report.success_tick = tick;
  r.report.avg_speed = speed;
  return r;
}

}  // namespace

TEST(DistanceError, Examples) {
  EXPECT_DOUBLE_EQ(distance_error({polar(0, 4), polar(90, 4), polar(200, 4)}, Vec3::Zero(), 4.0), 0.0);
  EXPECT_DOUBLE_EQ(distance_error({polar(30, 5)}, Vec3::Zero(), 4.0), 1.0);
  EXPECT_DOUBLE_EQ(distance_error({polar(30, 5), polar(100, 3.5)}, Vec3::Zero(), 4.0), 0.75);
  EXPECT_THROW(distance_error({}, Vec3::Zero(), 4.0), std::invalid_argument);
}

TEST(DistanceError, IgnoresAltitude) {
  EXPECT_DOUBLE_EQ(distance_error({Vec3(0, 4, 7)}, Vec3(0, 0, 2), 4.0), 0.0);
}

TEST(DistanceError, RigidMotionInvariant) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 5; ++i) pts.emplace_back(rng.uniform(-8, 8), rng.uniform(-8, 8), 2.0);
    const Vec3 target(rng.uniform(-2, 2), rng.uniform(-2, 2), 2.0);
    const double a = rng.uniform(-kPi, kPi);
    const Vec3 shift(rng.uniform(-20, 20), rng.uniform(-20, 20), 0.0);
    auto move = [&](const Vec3& p) -> Vec3 {
      return Vec3(std::cos(a) * p.x() - std::sin(a) * p.y(), std::sin(a) * p.x() + std::cos(a) * p.y(), p.z()) + shift;
    };
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(move(p));
    EXPECT_NEAR(distance_error(pts, target, 4.0), distance_error(moved, move(target), 4.0), 1e-9);
  }
}

TEST(Success, Examples) {
  EXPECT_TRUE(is_success(stopped_at({0, 120, 240}, 4.0), Vec3::Zero(), 4.0));
  EXPECT_FALSE(is_success(stopped_at({10, 30, 50, 70}, 4.0), Vec3::Zero(), 4.0));
  EXPECT_TRUE(is_success(stopped_at({10, 130, 250, 255}, 4.0), Vec3::Zero(), 4.0));
}

TEST(Success, SectorMembership) {
  EXPECT_EQ(sector_of(0.0, 0.0), 0);
  EXPECT_EQ(sector_of(deg2rad(119.9), 0.0), 0);
  EXPECT_EQ(sector_of(deg2rad(120.1), 0.0), 1);
  EXPECT_EQ(sector_of(deg2rad(-1.0), 0.0), 2);
  EXPECT_EQ(sector_of(deg2rad(359.999), 0.0), 2);
}

TEST(Success, RequiresStoppedAndOnRing) {
  auto c = stopped_at({10, 130, 250}, 4.0);
  c[1].speed = 0.6;
  EXPECT_FALSE(is_success(c, Vec3::Zero(), 4.0));
  c[1].speed = 0.5;
  EXPECT_TRUE(is_success(c, Vec3::Zero(), 4.0));
  c[2].position = polar(250, 4.6);
  EXPECT_FALSE(is_success(c, Vec3::Zero(), 4.0));
}

TEST(Success, StrictNeedsTwoPerSector) {
  SuccessCriteria strict;
  strict.min_per_sector = 2;
  EXPECT_FALSE(is_success(stopped_at({10, 130, 250, 255}, 4.0), Vec3::Zero(), 4.0, strict));
  EXPECT_TRUE(is_success(stopped_at({10, 20, 130, 140, 250, 255}, 4.0), Vec3::Zero(), 4.0, strict));
}

TEST(Success, InvariantUnderJointRotation) {
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> b;
    for (int i = 0; i < 4; ++i) b.push_back(rng.uniform(0.0, 360.0));
    const double rot = rng.uniform(0.0, 360.0);
    std::vector<double> rb;
    for (double x : b) rb.push_back(x + rot);
    SuccessCriteria c0, c1;
    c1.sector_origin = deg2rad(rot);
    const Vec3 t(1.0, -2.0, 2.0);
    EXPECT_EQ(is_success(stopped_at(b, 4.0, t), t, 4.0, c0), is_success(stopped_at(rb, 4.0, t), t, 4.0, c1));
  }
}

TEST(Summarize, AllSucceedByTenSeconds) {
  std::vector<RunSummary> runs;
  for (int k = 0; k < 20; ++k) runs.push_back(run_with(10.0, 100 + 5 * k));  // 5 s to 9.75 s
  const auto rows = summarize(runs, {6.0, 10.0, 14.0});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].runs, 20);
  EXPECT_DOUBLE_EQ(rows[0].rates[1], 100.0);
  EXPECT_DOUBLE_EQ(rows[0].rates[2], 100.0);
  EXPECT_DOUBLE_EQ(rows[0].rates[0], 100.0 * 5 / 20);  // ticks 100..120
}

TEST(Summarize, EmptyGivesHeaderOnly) {
  std::ostringstream os;
  write_table_csv(os, summarize({}, {6.0, 10.0, 14.0}), {6.0, 10.0, 14.0});
  EXPECT_EQ(os.str(), "initial_distance_m,rate_at_6s,rate_at_10s,rate_at_14s,avg_speed_mps\n");
}

TEST(Summarize, SingleRunIsAllOrNothing) {
  for (auto tick : {std::optional<std::int64_t>{}, std::optional<std::int64_t>{150}}) {
    const auto rows = summarize({run_with(6.0, tick)}, {6.0, 10.0, 14.0});
    for (double r : rows[0].rates) EXPECT_TRUE(r == 0.0 || r == 100.0);
  }
}

TEST(Summarize, RowsPerDistanceAndMonotone) {
  Rng rng(12);
  std::vector<RunSummary> runs;
  for (int k = 0; k < 60; ++k) {
    const double d = k % 3 == 0 ? 6.0 : (k % 3 == 1 ? 10.0 : 14.0);
    std::optional<std::int64_t> t;
    if (rng.bernoulli(0.8)) t = static_cast<std::int64_t>(rng.uniform(20.0, 400.0));
    runs.push_back(run_with(d, t, rng.uniform(1.0, 3.0)));
  }
  const auto rows = summarize(runs, {2.0, 6.0, 10.0, 14.0, 20.0});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].initial_distance, 6.0);
  for (const auto& r : rows) {
    EXPECT_EQ(r.runs, 20);
    for (std::size_t c = 1; c < r.rates.size(); ++c) EXPECT_LE(r.rates[c - 1], r.rates[c]);
  }
}

TEST(Summarize, AverageSpeedOverSuccessfulRuns) {
  const auto rows = summarize({run_with(6.0, 50, 2.0), run_with(6.0, 60, 4.0), run_with(6.0, {}, 100.0)}, {14.0});
  EXPECT_DOUBLE_EQ(rows[0].avg_speed, 3.0);
}

TEST(Evaluate, SyntheticLog) {
  // Three captors settle on a 4 m ring at tick 3 and stay stopped.
  RunLog log;
  log.safe_distance = 2.0;
  for (int t = 0; t < 10; ++t) {
    TickLog tl;
    tl.tick = t;
    BodySample target;
    target.id = kTargetIdBase;
    target.kind = BodyKind::Target;
    tl.bodies.push_back(target);
    for (int i = 0; i < 3; ++i) {
      BodySample c;
      c.id = i;
      c.kind = BodyKind::Captor;
      c.state = t == 0 ? "searching" : "approaching";
      const double r = t < 3 ? 4.0 + (3 - t) : 4.0;
      c.position = polar(120.0 * i + 10.0, r);
      c.velocity = t < 3 ? Vec3(1.0, 0.0, 0.0) : Vec3::Zero();
      c.has_pattern = true;
      c.pattern_radius = 4.0;
      tl.bodies.push_back(c);
    }
    log.ticks.push_back(tl);
  }
  log.collisions.push_back({4, 0, 1});
  log.collisions.push_back({4, 1, kTargetIdBase});
  const auto rep = evaluate(log);
  ASSERT_TRUE(rep.success_tick);
  EXPECT_EQ(*rep.success_tick, 3);
  EXPECT_EQ(*rep.detect_tick, 1);
  EXPECT_DOUBLE_EQ(rep.d_bar[0], 3.0);
  EXPECT_NEAR(rep.mean_dbar_after_success, 0.0, 1e-12);
  // Ticks 1..3: speed 1, 1, 0.
  EXPECT_NEAR(rep.avg_speed, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.collisions, 1);
  EXPECT_DOUBLE_EQ(fraction_dbar_within(rep, 1.0), 1.0);
  for (double d : rep.d_bar) EXPECT_GE(d, 0.0);
}

TEST(Evaluate, RingFallsBackToSafeDistance) {
  TickLog t;
  BodySample c;
  c.kind = BodyKind::Captor;
  c.has_pattern = true;
  c.fallback = true;
  c.pattern_radius = 9.0;
  t.bodies.push_back(c);
  EXPECT_DOUBLE_EQ(ring_radius_at(t, 2.0), 2.0);
}

TEST(Report, CsvColumns) {
  std::ostringstream os;
  RunSummary r = run_with(10.0, {});
  r.run_id = "a";
  r.seed = 4;
  write_report_csv(os, {r});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "run_id,seed,success_tick,avg_speed_mps,mean_dbar_after_success,collisions");
  EXPECT_NE(os.str().find("a,4,,1,0,0"), std::string::npos);
}
