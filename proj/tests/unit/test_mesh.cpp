#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "cadg/errors.hpp"
#include "cadg/mesh.hpp"
#include "cadg/metrics.hpp"

using namespace cadg;

namespace {

GridSpec spec(int d, int L, int p, int m, BoundaryKind b = BoundaryKind::periodic,
              StorageLayout layout = StorageLayout::hull) {
  GridSpec s;
  s.dims = d;
  s.depth = L;
  s.order = p;
  s.components = m;
  s.boundary = b;
  s.layout = layout;
  return s;
}

bool isPermutation(std::vector<int> order, std::size_t n) {
  if (order.size() != n) return false;
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < n; ++i)
    if (order[i] != static_cast<int>(i)) return false;
  return true;
}

}  // namespace

TEST(BuildGrid, ThreeDimensionalDepthThree) {
  const auto g = buildGrid(spec(3, 3, 0, 5));
  EXPECT_EQ(g->cellsPerAxis(), 27);
  EXPECT_EQ(g->cells().size(), 27u * 27u * 27u);
}

// Periodic wrap identifies the outer faces pairwise: 3 faces per row, 3 rows, 2 axes.
TEST(BuildGrid, PeriodicFaceCount) {
  const auto g = buildGrid(spec(2, 1, 1, 1));
  EXPECT_EQ(g->cells().size(), 9u);
  EXPECT_EQ(g->faces().size(), 18u);
  EXPECT_EQ(g->interiorFaceCount(), 18);
  EXPECT_EQ(g->boundaryFaceCount(), 0);
  // 4 face slots per cell, each face seen from both sides.
  std::vector<int> seen(g->faces().size(), 0);
  for (const Cell& c : g->cells())
    for (int s = 0; s < 4; ++s) ++seen[c.faces[s]];
  for (int n : seen) EXPECT_EQ(n, 2);
}

TEST(BuildGrid, OutflowFaceCount) {
  const auto g = buildGrid(spec(3, 1, 0, 5, BoundaryKind::outflow));
  EXPECT_EQ(g->cells().size(), 27u);
  EXPECT_EQ(g->interiorFaceCount(), 54);
  EXPECT_EQ(g->boundaryFaceCount(), 54);
}

TEST(BuildGrid, NeighbourAndSides) {
  const auto g = buildGrid(spec(2, 1, 0, 1));
  const int c = g->cellId({1, 1, 0});
  EXPECT_EQ(g->neighbour(c, 1), g->cellId({2, 1, 0}));
  EXPECT_EQ(g->neighbour(c, 2), g->cellId({1, 0, 0}));
  const int corner = g->cellId({0, 0, 0});
  EXPECT_EQ(g->neighbour(corner, 0), g->cellId({2, 0, 0}));  // periodic wrap
  for (int slot = 0; slot < 4; ++slot) {
    const int f = g->cell(c).faces[slot];
    EXPECT_EQ(g->sideOf(c, f), 1 - slot % 2);
    EXPECT_EQ(g->face(f).axis, slot / 2);
  }
  const auto o = buildGrid(spec(2, 1, 0, 1, BoundaryKind::outflow));
  EXPECT_EQ(o->neighbour(o->cellId({0, 0, 0}), 0), -1);
  EXPECT_TRUE(o->face(o->cell(0).faces[0]).isBoundary());
}

TEST(BuildGrid, BlocksAreSized) {
  const auto g = buildGrid(spec(3, 1, 2, 5));
  EXPECT_EQ(g->cellBlockSize(), 5u * 27u);
  EXPECT_EQ(g->spaceTimeBlockSize(), 5u * 81u);
  EXPECT_EQ(g->cell(0).Q.size(), g->cellBlockSize());
  EXPECT_EQ(g->face(0).hullQ[0].size(), 5u * 27u);
  EXPECT_NEAR(g->position(g->cellId({2, 0, 0}), 0, 0.5), 5.0 / 6.0, 1e-15);
}

TEST(BuildGrid, RejectsBadSpecs) {
  EXPECT_THROW(buildGrid(spec(1, 1, 0, 1)), ConfigError);
  EXPECT_THROW(buildGrid(spec(2, 0, 0, 1)), ConfigError);
  EXPECT_THROW(buildGrid(spec(2, 5, 0, 1)), ConfigError);
  EXPECT_THROW(buildGrid(spec(2, 1, 10, 1)), ConfigError);
  EXPECT_THROW(buildGrid(spec(2, 1, 0, 0)), ConfigError);
}

TEST(BuildGrid, MemoryBudget) {
  GridSpec s = spec(3, 4, 9, 5);
  EXPECT_GT(estimateGridBytes(s), kDefaultMemoryBudgetBytes);
  EXPECT_THROW(buildGrid(s), ResourceError);
  s = spec(2, 1, 0, 1);
  s.memoryBudgetBytes = 16;
  EXPECT_THROW(buildGrid(s), ResourceError);
}

TEST(AllocationAudit, FusedLayoutMatchesFootprint) {
  for (int d : {2, 3})
    for (int p : {0, 2, 3, 5})
      for (int m : {1, 5}) {
        const auto g = buildGrid(spec(d, 1, p, m, BoundaryKind::periodic, layoutFor(SchedulerMode::fused)));
        const std::size_t M = static_cast<std::size_t>(m) * static_cast<std::size_t>(std::pow(p + 1, d));
        EXPECT_EQ(g->persistentDoubles(), g->cells().size() * (2 + 6 * d) * M) << d << p << m;
        EXPECT_EQ(g->persistentDoubles() / g->cells().size(), persistentFootprint(SchedulerMode::fused, d, p, m));
      }
}

TEST(AllocationAudit, StraightforwardLayoutMatchesFootprint) {
  for (int d : {2, 3})
    for (int p : {0, 2, 3, 5})
      for (int m : {1, 5}) {
        const auto g =
            buildGrid(spec(d, 1, p, m, BoundaryKind::periodic, layoutFor(SchedulerMode::straightforward)));
        const std::size_t M = static_cast<std::size_t>(m) * static_cast<std::size_t>(std::pow(p + 1, d));
        const std::size_t perCell = static_cast<std::size_t>((d + 1) * (p + 1) + 1 + 6 * d) * M;
        EXPECT_EQ(g->persistentDoubles(), g->cells().size() * perCell) << d << p << m;
        EXPECT_EQ(perCell, persistentFootprint(SchedulerMode::straightforward, d, p, m));
      }
}

TEST(TraversalOrder, LexicographicIsRowMajor) {
  const auto g = buildGrid(spec(2, 1, 0, 1));
  const auto order = traversalOrder(*g, TraversalKind::lexicographic);
  const std::vector<std::array<int, 3>> expected{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(g->cell(order[i]).index, expected[i]);
}

TEST(TraversalOrder, EveryKindIsAPermutation) {
  for (int d : {2, 3})
    for (int L : {1, 2}) {
      const auto g = buildGrid(spec(d, L, 0, 1));
      for (auto kind : {TraversalKind::lexicographic, TraversalKind::peano})
        EXPECT_TRUE(isPermutation(traversalOrder(*g, kind), g->cells().size()));
    }
}

TEST(TraversalOrder, PeanoSuccessorsShareAFace) {
  for (int d : {2, 3})
    for (int L = 1; L <= 3; ++L) {
      const auto curve = peanoCurve(d, L);
      const std::size_t n = static_cast<std::size_t>(std::pow(3, d * L));
      ASSERT_EQ(curve.size(), n);
      std::set<std::array<int, 3>> distinct(curve.begin(), curve.end());
      EXPECT_EQ(distinct.size(), n);
      for (std::size_t i = 1; i < curve.size(); ++i) {
        int dist = 0;
        for (int a = 0; a < 3; ++a) dist += std::abs(curve[i][a] - curve[i - 1][a]);
        ASSERT_EQ(dist, 1) << "d=" << d << " L=" << L << " at " << i;
      }
    }
}

TEST(TraversalOrder, PeanoGridOrderFollowsCurve) {
  const auto g = buildGrid(spec(2, 2, 0, 1));
  const auto order = traversalOrder(*g, TraversalKind::peano);
  const auto curve = peanoCurve(2, 2);
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(g->cell(order[i]).index, curve[i]);
}

TEST(ClaimFirstTouch, OncePerSweep) {
  const auto g = buildGrid(spec(2, 1, 0, 1));
  g->beginSweep();
  EXPECT_TRUE(g->claimFirstTouch(3));
  EXPECT_FALSE(g->claimFirstTouch(3));
  EXPECT_TRUE(g->claimFirstTouch(4));
  g->endSweep();
  g->beginSweep();
  EXPECT_TRUE(g->claimFirstTouch(3));
  g->endSweep();
}

TEST(ClaimFirstTouch, RequiresActiveSweep) {
  const auto g = buildGrid(spec(2, 1, 0, 1));
  EXPECT_THROW(g->claimFirstTouch(0), UsageError);
  EXPECT_THROW(g->endSweep(), UsageError);
  g->beginSweep();
  EXPECT_THROW(g->beginSweep(), UsageError);
}
