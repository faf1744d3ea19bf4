#include "vgswarm/localmap.hpp"

#include <gtest/gtest.h>

using namespace vgswarm;

namespace {

Detection det(double cx, double cy, double w, double h, BodyKind kind = BodyKind::Target, int cam = 0) {
  Detection d;
  d.camera_index = cam;
  d.box = {cx, cy, w, h};
  d.kind = kind;
  return d;
}

RelPosition rel(double x, double y) {
  RelPosition p;
  p.position = {x, y, 0.0};
  p.distance = std::hypot(x, y);
  return p;
}

}  // namespace

TEST(Iou, Identical) { EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0); }

TEST(Iou, Disjoint) { EXPECT_DOUBLE_EQ(iou({0, 0, 1, 1}, {5, 5, 1, 1}), 0.0); }

TEST(Iou, HalfOffsetUnitSquares) { EXPECT_NEAR(iou({0, 0, 1, 1}, {0.5, 0, 1, 1}), 0.5 / 1.5, 1e-12); }

TEST(Associate, EmptyMapSpawnsRecord) {
  const LocalMap m = associate({}, {det(0, 0, 10, 10)}, {rel(0, 5)}, 0.05, 0);
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].lost, 0);
  EXPECT_EQ(m.records[0].kind, RecordKind::Target);
}

TEST(Associate, PrunedAfterThreshold) {
  LocalMap m;
  m.n_max = 10;
  m = associate(m, {det(0, 0, 10, 10)}, {rel(0, 5)}, 0.05, 0);
  for (int k = 1; k <= 10; ++k) {
    m = associate(m, {}, {}, 0.05, k);
    ASSERT_EQ(m.records.size(), 1u) << k;
    EXPECT_EQ(m.records[0].lost, k);
  }
  m = associate(m, {}, {}, 0.05, 11);
  EXPECT_TRUE(m.records.empty());
}

TEST(Associate, GreedyOnSortedIou) {
  // IoU matrix (detection x record) about {0.82, 0.18; 0.21, 0.74}.
  LocalMap m;
  m = associate(m, {det(0, 0, 10, 10), det(8, 0, 10, 10)}, {rel(0, 5), rel(2, 5)}, 0.05, 0);
  ASSERT_EQ(m.records.size(), 2u);
  const int id0 = m.records[0].id, id1 = m.records[1].id;
  const std::vector<Detection> d{det(1, 0, 10, 10), det(6.5, 0, 10, 10)};
  EXPECT_NEAR(iou(m.records[0].box, d[0].box), 9.0 / 11.0, 1e-12);
  EXPECT_NEAR(iou(m.records[1].box, d[0].box), 3.0 / 17.0, 1e-12);
  EXPECT_NEAR(iou(m.records[0].box, d[1].box), 3.5 / 16.5, 1e-12);
  EXPECT_NEAR(iou(m.records[1].box, d[1].box), 8.5 / 11.5, 1e-12);
  m = associate(m, d, {rel(0.1, 5), rel(2.1, 5)}, 0.05, 1);
  ASSERT_EQ(m.records.size(), 2u);
  for (const auto& r : m.records) {
    EXPECT_EQ(r.lost, 0);
    if (r.id == id0) {
      EXPECT_DOUBLE_EQ(r.box.cx, 1.0);
    } else if (r.id == id1) {
      EXPECT_DOUBLE_EQ(r.box.cx, 6.5);
    }
  }
}

TEST(Associate, KindAndCameraGate) {
  LocalMap m = associate({}, {det(0, 0, 10, 10)}, {rel(0, 5)}, 0.05, 0);
  m = associate(m, {det(0, 0, 10, 10, BodyKind::Obstacle)}, {rel(0, 5)}, 0.05, 1);
  EXPECT_EQ(m.records.size(), 2u);
  m = associate(m, {det(0, 0, 10, 10, BodyKind::Target, 1)}, {rel(5, 0)}, 0.05, 2);
  EXPECT_EQ(m.records.size(), 3u);
}

TEST(Associate, IdempotentOnRepeatedDetections) {
  const std::vector<Detection> d{det(0, 0, 10, 10), det(50, 0, 8, 8, BodyKind::Captor)};
  const std::vector<RelPosition> p{rel(0, 5), rel(3, 4)};
  LocalMap m = associate({}, d, p, 0.05, 0);
  std::vector<int> ids;
  for (const auto& r : m.records) ids.push_back(r.id);
  for (int k = 1; k < 5; ++k) {
    m = associate(m, d, p, 0.05, k);
    ASSERT_EQ(m.records.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(m.records[i].id, ids[i]);
      EXPECT_EQ(m.records[i].lost, 0);
    }
  }
}

TEST(Associate, TieGoesToLowerRecordId) {
  LocalMap m;
  m = associate(m, {det(-5, 0, 10, 10), det(5, 0, 10, 10)}, {rel(0, 5), rel(1, 5)}, 0.05, 0);
  // A detection centred between both records overlaps each equally.
  m = associate(m, {det(0, 0, 10, 10)}, {rel(0.5, 5)}, 0.05, 1);
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0].lost, 0);
  EXPECT_EQ(m.records[1].lost, 1);
}

TEST(Associate, RecordCountBound) {
  Rng rng(5);
  LocalMap m;
  for (int k = 0; k < 200; ++k) {
    std::vector<Detection> d;
    std::vector<RelPosition> p;
    const int n = static_cast<int>(rng.uniform() * 5);
    for (int i = 0; i < n; ++i) {
      d.push_back(det(rng.uniform(-300, 300), rng.uniform(-200, 200), 20, 20,
                      static_cast<BodyKind>(static_cast<int>(rng.uniform() * 3)), static_cast<int>(rng.uniform() * 4)));
      p.push_back(rel(rng.uniform(-5, 5), rng.uniform(1, 5)));
    }
    const int before = static_cast<int>(m.records.size());
    m = associate(m, d, p, 0.05, k);
    int fresh = 0;
    for (const auto& r : m.records) {
      EXPECT_GE(r.lost, 0);
      EXPECT_LE(r.lost, m.n_max);
      if (r.lost == 0) ++fresh;
    }
    EXPECT_LE(fresh, n);
    EXPECT_LE(static_cast<int>(m.records.size()), n + before);
  }
}

TEST(Associate, MisalignedInputsThrow) {
  EXPECT_THROW(associate({}, {det(0, 0, 1, 1)}, {}, 0.05, 0), std::invalid_argument);
}

TEST(Snapshot, PartitionsByKind) {
  LocalMap m;
  m = associate(m,
                {det(-200, 0, 10, 10), det(-100, 0, 10, 10), det(0, 0, 10, 10, BodyKind::Obstacle),
                 det(100, 0, 10, 10, BodyKind::Captor), det(150, 0, 10, 10, BodyKind::Captor),
                 det(200, 0, 10, 10, BodyKind::Captor)},
                {rel(0, 5), rel(1, 5), rel(2, 5), rel(3, 5), rel(4, 5), rel(5, 5)}, 0.05, 0);
  const MapSnapshot s = snapshot(m);
  EXPECT_EQ(s.targets.size(), 2u);
  EXPECT_EQ(s.obstacles.size(), 1u);
  EXPECT_EQ(s.neighbors.size(), 3u);
}

TEST(Snapshot, SingleTargetPosition) {
  const LocalMap m = associate({}, {det(0, 0, 10, 10)}, {rel(0, 5)}, 0.05, 0);
  const MapSnapshot s = snapshot(m);
  ASSERT_EQ(s.targets.size(), 1u);
  EXPECT_NEAR((s.targets[0] - Vec3(0, 5, 0)).norm(), 0.0, 1e-12);
  EXPECT_TRUE(s.obstacles.empty());
  EXPECT_TRUE(s.neighbors.empty());
}

TEST(Snapshot, StaleRecordKept) {
  LocalMap m = associate({}, {det(0, 0, 10, 10)}, {rel(0, 5)}, 0.05, 0);
  m = associate(m, {}, {}, 0.05, 1);
  ASSERT_EQ(m.records[0].lost, 1);
  EXPECT_EQ(snapshot(m).targets.size(), 1u);
  EXPECT_TRUE(has_target(m));
}
