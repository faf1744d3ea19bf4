#include "vgswarm/world.hpp"

#include "vgswarm/rng.hpp"

#include <gtest/gtest.h>

using namespace vgswarm;

namespace {

Body sphere(int id, const Vec3& p, double radius = 0.3) {
  Body b;
  b.id = id;
  b.pose.position = p;
  b.radius = radius;
  return b;
}

}  // namespace

TEST(Frames, IdentityObserver) {
  const Vec3 l = world_to_local({}, {0.0, 5.0, 0.0});
  EXPECT_NEAR(l.x(), 0.0, 1e-12);
  EXPECT_NEAR(l.y(), 5.0, 1e-12);
  EXPECT_NEAR(l.z(), 0.0, 1e-12);
}

TEST(Frames, NoseTowardEast) {
  Pose3 obs;
  obs.heading = kPi / 2.0;
  const Vec3 l = world_to_local(obs, {5.0, 0.0, 0.0});
  EXPECT_NEAR(l.x(), 0.0, 1e-12);
  EXPECT_NEAR(l.y(), 5.0, 1e-12);
}

TEST(Frames, RightHandedLocalAxes) {
  // Heading 0 faces +y; a point to the east is on the right (+x).
  const Vec3 l = world_to_local({}, {2.0, 0.0, 1.0});
  EXPECT_NEAR(l.x(), 2.0, 1e-12);
  EXPECT_NEAR(l.y(), 0.0, 1e-12);
  EXPECT_NEAR(l.z(), 1.0, 1e-12);
}

TEST(Frames, RoundTripRandomPoses) {
  Rng rng(42);
  for (int k = 0; k < 100; ++k) {
    Pose3 obs;
    obs.position = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 10)};
    obs.heading = rng.uniform(-kPi, kPi);
    const Vec3 p{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 10)};
    EXPECT_LT((local_to_world(obs, world_to_local(obs, p)) - p).norm(), 1e-9);
    const Vec3 v{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    EXPECT_LT((local_vector_to_world(obs.heading, world_vector_to_local(obs.heading, v)) - v).norm(), 1e-12);
  }
}

TEST(Frames, NormalizeAngleRange) {
  for (double a : {-10.0, -kPi, -1.0, 0.0, 1.0, kPi, 7.0, 100.0}) {
    const double n = normalize_angle(a);
    EXPECT_GE(n, -kPi);
    EXPECT_LT(n, kPi);
    EXPECT_NEAR(std::remainder(n - a, kTwoPi), 0.0, 1e-9);
  }
  EXPECT_EQ(normalize_angle(0.3), 0.3);
  EXPECT_THROW(normalize_angle(std::nan("")), std::invalid_argument);
}

TEST(Frames, NedConversion) {
  const Vec3 ned = to_ned({1.0, 2.0, 3.0});
  EXPECT_EQ(ned, Vec3(2.0, 1.0, -3.0));
}

TEST(Kinematics, IntegratesVelocity) {
  WorldState w;
  w.dt = 0.1;
  w.bodies.push_back(sphere(0, Vec3::Zero()));
  const WorldState next = step_kinematics(w, {{0, Vec3(1.0, 0.0, 0.0)}});
  EXPECT_NEAR((next.bodies[0].pose.position - Vec3(0.1, 0.0, 0.0)).norm(), 0.0, 1e-15);
  EXPECT_EQ(next.tick, 1);
}

TEST(Kinematics, ClampsToMaxSpeed) {
  WorldState w;
  w.dt = 0.1;
  w.bodies.push_back(sphere(0, Vec3::Zero()));
  w.bodies[0].max_speed = 5.0;
  const WorldState next = step_kinematics(w, {{0, Vec3(10.0, 0.0, 0.0)}});
  EXPECT_NEAR(next.bodies[0].pose.position.norm(), 0.5, 1e-12);
  EXPECT_LE(next.bodies[0].velocity.norm(), 5.0 + 1e-12);
}

TEST(Kinematics, FailedBodyHolds) {
  WorldState w;
  w.bodies.push_back(sphere(0, Vec3(1.0, 2.0, 3.0)));
  w.bodies[0].failed = true;
  const WorldState next = step_kinematics(w, {{0, Vec3(3.0, 0.0, 0.0)}});
  EXPECT_EQ(next.bodies[0].pose.position, Vec3(1.0, 2.0, 3.0));
  EXPECT_EQ(next.bodies[0].velocity, Vec3::Zero());
}

TEST(Kinematics, UnknownIdThrows) {
  WorldState w;
  w.bodies.push_back(sphere(0, Vec3::Zero()));
  EXPECT_THROW(step_kinematics(w, {{7, Vec3::Zero()}}), std::out_of_range);
}

TEST(Kinematics, DeterministicAndSpeedBounded) {
  Rng rng(3);
  WorldState w;
  for (int i = 0; i < 20; ++i) {
    w.bodies.push_back(sphere(i, {rng.uniform(-5, 5), rng.uniform(-5, 5), 2.0}));
    w.bodies.back().max_speed = rng.uniform(0.5, 5.0);
  }
  std::map<int, Vec3> cmds;
  for (int i = 0; i < 20; ++i) cmds[i] = {rng.normal(0, 8), rng.normal(0, 8), rng.normal(0, 8)};
  const WorldState a = step_kinematics(w, cmds);
  const WorldState b = step_kinematics(w, cmds);
  for (std::size_t i = 0; i < a.bodies.size(); ++i) {
    EXPECT_EQ(a.bodies[i].pose.position, b.bodies[i].pose.position);
    EXPECT_LE(a.bodies[i].velocity.norm(), a.bodies[i].max_speed + 1e-12);
  }
}

TEST(Collisions, OverlapReported) {
  WorldState w;
  w.bodies = {sphere(0, Vec3::Zero()), sphere(1, Vec3(0.5, 0.0, 0.0))};
  const auto c = check_collisions(w);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], std::make_pair(0, 1));
}

TEST(Collisions, SeparatedNotReported) {
  WorldState w;
  w.bodies = {sphere(0, Vec3::Zero()), sphere(1, Vec3(0.61, 0.0, 0.0))};
  EXPECT_TRUE(check_collisions(w).empty());
}

TEST(Collisions, ThreeMutualPairsOrderedById) {
  WorldState w;
  w.bodies = {sphere(5, Vec3(0.2, 0.0, 0.0)), sphere(2, Vec3::Zero()), sphere(9, Vec3(0.1, 0.1, 0.0))};
  const auto c = check_collisions(w);
  const std::vector<std::pair<int, int>> expected{{2, 5}, {2, 9}, {5, 9}};
  EXPECT_EQ(c, expected);
}

TEST(Collisions, CylinderFootprintAndHeight) {
  Body post;
  post.id = 1000;
  post.kind = BodyKind::Obstacle;
  post.radius = 0.4;
  post.height = 6.0;
  WorldState w;
  w.bodies = {post, sphere(0, Vec3(0.6, 0.0, 2.0))};
  EXPECT_EQ(check_collisions(w).size(), 1u);
  w.bodies[1].pose.position = {0.6, 0.0, 6.5};  // above the top
  EXPECT_TRUE(check_collisions(w).empty());
  Body post2 = post;
  post2.id = 1001;
  post2.pose.position = {0.1, 0.0, 0.0};
  w.bodies.push_back(post2);  // overlapping obstacles are scenery
  EXPECT_TRUE(check_collisions(w).empty());
}

TEST(WorldValidation, RejectsDuplicateIds) {
  WorldState w;
  w.bodies = {sphere(1, Vec3::Zero()), sphere(1, Vec3(5, 0, 0))};
  EXPECT_THROW(validate(w), std::invalid_argument);
}
